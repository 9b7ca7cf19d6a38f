"""Differentiable-kernel layer: gradients, modules, optimizer, checkpoints."""

import numpy as np
import pytest

import h2v.nn.functional as F
from h2v.errors import DataError, InternalFault
from h2v.nn.checkpoint import load_weights, save_weights
from h2v.nn.grad_check import grad_check
from h2v.nn.modules import Bottleneck, Conv2d, Linear, Mlp, Module
from h2v.nn.optim import SGD, step_lr
from h2v.nn.tensor import Tensor, concat


def leaf(rng, shape, shift=0.0):
    return Tensor(rng.standard_normal(shape) + shift, requires_grad=True)


class TestTensorOps:
    def test_add_mul_broadcast_grads(self):
        rng = np.random.default_rng(0)
        a = leaf(rng, (3, 4))
        b = leaf(rng, (4,))
        assert grad_check(lambda: ((a * b) + a).sum(), [a, b]) < 1e-6

    def test_matmul_grad(self):
        rng = np.random.default_rng(1)
        a = leaf(rng, (3, 5))
        b = leaf(rng, (5, 2))
        assert grad_check(lambda: (a @ b).square().sum(), [a, b]) < 1e-5

    def test_relu_off_kink(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.uniform(0.2, 1.0, (4, 4)) * rng.choice([-1, 1], (4, 4)),
                   requires_grad=True)
        assert grad_check(lambda: x.relu().sum(), [x]) < 1e-6

    def test_reshape_transpose_concat(self):
        rng = np.random.default_rng(3)
        a = leaf(rng, (2, 6))
        b = leaf(rng, (3, 6))

        def fn():
            joined = concat([a, b], axis=0)
            return joined.transpose().reshape(6, 5).square().mean()

        assert grad_check(fn, [a, b]) < 1e-5

    def test_backward_accumulates_through_reuse(self):
        x = Tensor(np.array([2.0]), requires_grad=True)
        y = x * x + x
        y.backward()
        assert x.grad[0] == pytest.approx(5.0)

    def test_detach_blocks_gradient(self):
        x = Tensor(np.array([3.0]), requires_grad=True)
        (x.detach() * x).backward()
        assert x.grad[0] == pytest.approx(3.0)


class TestFunctional:
    def test_conv2d_matches_direct_convolution(self):
        rng = np.random.default_rng(4)
        x = Tensor(rng.standard_normal((1, 1, 5, 5)))
        w = Tensor(rng.standard_normal((1, 1, 3, 3)))
        out = F.conv2d(x, w, None, stride=1, padding=0).data[0, 0]
        want = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                want[i, j] = np.sum(x.data[0, 0, i:i + 3, j:j + 3]
                                    * w.data[0, 0])
        np.testing.assert_allclose(out, want, atol=1e-12)

    def test_conv2d_grad(self):
        rng = np.random.default_rng(5)
        x = leaf(rng, (2, 3, 6, 6))
        w = leaf(rng, (4, 3, 3, 3))
        b = leaf(rng, (4,))
        assert grad_check(
            lambda: F.conv2d(x, w, b, stride=2, padding=1).square().mean(),
            [x, w, b], max_elements_per_param=20,
            rng=np.random.default_rng(0)) < 1e-5

    def test_gap_conserves_mean(self):
        rng = np.random.default_rng(6)
        x = Tensor(rng.standard_normal((2, 3, 4, 5)))
        out = F.global_avg_pool(x)
        np.testing.assert_allclose(out.data, x.data.mean(axis=(2, 3)),
                                   atol=1e-12)

    def test_roi_align_grad(self):
        rng = np.random.default_rng(7)
        x = leaf(rng, (1, 2, 8, 8))
        rois = np.array([[0, 1.0, 1.0, 6.5, 7.0], [0, 0.0, 2.0, 4.0, 5.0]])
        assert grad_check(
            lambda: F.roi_align(x, rois, out_size=3,
                                sampling_ratio=2).square().mean(),
            [x], max_elements_per_param=30,
            rng=np.random.default_rng(1)) < 1e-5

    def test_bilinear_resize_constant(self):
        x = Tensor(np.full((1, 2, 3, 3), 1.5))
        out = F.bilinear_resize(x, 7, 5)
        np.testing.assert_allclose(out.data, 1.5, atol=1e-12)

    def test_mse_value_and_grad(self):
        pred = Tensor(np.array([0.8, 0.1]), requires_grad=True)
        loss = F.mse(pred, np.array([1.0, 0.0]))
        assert loss.item() == pytest.approx(0.025, abs=1e-12)
        loss.backward()
        np.testing.assert_allclose(pred.grad, [-0.2, 0.1], atol=1e-12)

    def test_pairwise_hinge_value(self):
        scores = Tensor(np.array([0.5, 0.2]), requires_grad=True)
        # one ordered pair: scores[1] should beat scores[0] by the margin
        inc = np.array([[1.0, -1.0]])
        loss = F.pairwise_hinge(scores, inc, margin=0.1)
        assert loss.item() == pytest.approx(0.4, abs=1e-12)


class TestModules:
    def test_bottleneck_identity_skip_shape(self):
        rng = np.random.default_rng(8)
        blk = Bottleneck(6, 3, rng)
        assert blk.project is None
        x = Tensor(rng.standard_normal((2, 6, 5, 5)))
        assert blk(x).shape == (2, 6, 5, 5)

    def test_bottleneck_projection_when_widths_differ(self):
        rng = np.random.default_rng(9)
        blk = Bottleneck(4, 2, rng, out_channels=7)
        assert blk.project is not None
        x = Tensor(rng.standard_normal((1, 4, 5, 5)))
        assert blk(x).shape == (1, 7, 5, 5)

    def test_bottleneck_grad(self):
        rng = np.random.default_rng(10)
        blk = Bottleneck(3, 2, rng)
        x = Tensor(rng.standard_normal((1, 3, 4, 4)) + 0.5)
        assert grad_check(lambda: blk(x).square().mean(), blk.parameters(),
                          max_elements_per_param=10,
                          rng=np.random.default_rng(2)) < 1e-4

    def test_named_parameters_walk_lists_and_submodules(self):
        rng = np.random.default_rng(11)
        mlp = Mlp([3, 4, 2], rng)
        names = [n for n, _ in mlp.named_parameters()]
        assert names == ["layers.0.weight", "layers.0.bias",
                         "layers.1.weight", "layers.1.bias"]

    def test_state_dict_round_trip(self):
        rng = np.random.default_rng(12)
        a = Mlp([3, 4, 2], rng)
        b = Mlp([3, 4, 2], np.random.default_rng(99))
        b.load_state_dict(a.state_dict())
        x = Tensor(rng.standard_normal((5, 3)))
        np.testing.assert_array_equal(a(x).data, b(x).data)

    def test_load_state_dict_rejects_mismatch(self):
        rng = np.random.default_rng(13)
        mlp = Mlp([3, 4, 2], rng)
        state = mlp.state_dict()
        state["extra"] = np.zeros(3)
        with pytest.raises(DataError):
            mlp.load_state_dict(state)
        state = mlp.state_dict()
        del state["layers.0.bias"]
        with pytest.raises(DataError):
            mlp.load_state_dict(state)
        state = mlp.state_dict()
        state["layers.0.weight"] = np.zeros((9, 9))
        with pytest.raises(DataError):
            mlp.load_state_dict(state)

    def test_seeded_init_is_deterministic(self):
        a = Conv2d(3, 4, 3, np.random.default_rng(42))
        b = Conv2d(3, 4, 3, np.random.default_rng(42))
        np.testing.assert_array_equal(a.weight.data, b.weight.data)
        np.testing.assert_array_equal(a.bias.data, b.bias.data)

    def test_module_forward_required(self):
        with pytest.raises(NotImplementedError):
            Module()(Tensor(np.zeros(1)))


class TestOptim:
    def test_sgd_momentum_math(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        opt = SGD([("p", p)], lr=0.1, momentum=0.9)
        p.grad = np.array([2.0])
        opt.step()
        assert p.data[0] == pytest.approx(1.0 - 0.1 * 2.0)
        p.grad = np.array([1.0])
        opt.step()
        # velocity = 0.9 * 2.0 + 1.0 = 2.8
        assert p.data[0] == pytest.approx(0.8 - 0.1 * 2.8)

    def test_zero_grad(self):
        p = Tensor(np.array([1.0]), requires_grad=True)
        opt = SGD([("p", p)], lr=0.1)
        p.grad = np.array([5.0])
        opt.zero_grad()
        assert p.grad is None

    def test_step_lr_schedule(self):
        assert step_lr(0.01, 0, 0.1, 10) == pytest.approx(0.01)
        assert step_lr(0.01, 9, 0.1, 10) == pytest.approx(0.01)
        assert step_lr(0.01, 10, 0.1, 10) == pytest.approx(0.001)
        assert step_lr(0.01, 25, 0.1, 10) == pytest.approx(1e-4)


class TestCheckpoint:
    def test_round_trip_is_f32_quantization(self, tmp_path):
        rng = np.random.default_rng(14)
        state = {"a.weight": rng.standard_normal((3, 4)),
                 "b": rng.standard_normal(5)}
        path = tmp_path / "w.bin"
        save_weights(state, path)
        loaded = load_weights(path)
        assert set(loaded) == {"a.weight", "b"}
        for k in state:
            np.testing.assert_array_equal(
                loaded[k], state[k].astype(np.float32).astype(np.float64))

    def test_save_load_save_is_idempotent(self, tmp_path):
        rng = np.random.default_rng(15)
        state = {"w": rng.standard_normal((4, 4))}
        p1, p2 = tmp_path / "1.bin", tmp_path / "2.bin"
        save_weights(state, p1)
        save_weights(load_weights(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_corrupt_files_rejected(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(DataError):
            load_weights(path)
        save_weights({"w": np.zeros((2, 2))}, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-3])  # truncate tensor data
        with pytest.raises(DataError):
            load_weights(path)
        path.write_bytes(b"H2VW" + (99).to_bytes(4, "little") + blob[8:])
        with pytest.raises(DataError):
            load_weights(path)
