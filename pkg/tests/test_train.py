import numpy as np
import pytest

from projeq import autodiff as ad
from projeq import data, spinornet, train, vierernet


class TestAdam:
    def test_zero_gradient_no_change(self):
        p = ad.Var(np.array([1.0, 2.0, 3.0]))
        p.grad = np.zeros(3)
        opt = train.Adam({"p": p}, lr=0.1)
        opt.step()
        assert np.array_equal(p.value, np.array([1.0, 2.0, 3.0]))

    def test_first_step_is_signed_lr(self):
        p = ad.Var(np.array([1.0, -1.0]))
        p.grad = np.array([0.3, -7.0])
        opt = train.Adam({"p": p}, lr=1e-2)
        opt.step()
        moved = p.value - np.array([1.0, -1.0])
        # bias-corrected first step is approximately -lr * sign(g)
        assert np.max(np.abs(moved + 1e-2 * np.sign([0.3, -7.0]))) < 1e-6

    def test_quadratic_bowl_convergence(self):
        rng = np.random.default_rng(0)
        target = rng.normal(size=4)
        p = ad.Var(np.zeros(4))
        opt = train.Adam({"p": p}, lr=1e-2)
        for _ in range(2000):
            opt.zero_grad()
            diff = ad.sub(p, target)
            loss = ad.scale(ad.sum_axis(ad.mul(diff, diff)), 0.5)
            ad.backward(loss)
            opt.step()
        assert np.max(np.abs(p.value - target)) < 1e-6

    def test_nan_gradient_aborts(self):
        p = ad.Var(np.ones(2))
        p.grad = np.array([np.nan, 0.0])
        opt = train.Adam({"p": p})
        with pytest.raises(train.DivergenceError):
            opt.step()


class TestTrainLoop:
    def _tiny_spinor_setup(self, lr, epochs=3, seed=9):
        tds = data.gen_spinor_dataset(24, 0.1, seed=1, rotate=False)
        eds = data.gen_spinor_dataset(16, 0.1, seed=2, rotate=True)
        net = spinornet.SpinorNet("squared-features", seed=3)
        res = train.train_loop(
            net,
            train.spinor_batch_fn(net, tds),
            train.spinor_batch_fn(net, eds),
            24,
            16,
            epochs=epochs,
            lr=lr,
            batch_size=8,
            seed=seed,
        )
        return res

    def test_zero_learning_rate_constant_metrics(self):
        res = self._tiny_spinor_setup(lr=0.0, epochs=4)
        train_rows = res.rows_for("train")
        eval_rows = res.rows_for("eval")
        for row in train_rows[1:]:
            assert row.loss == pytest.approx(train_rows[0].loss, abs=1e-14)
        for row in eval_rows[1:]:
            assert row.loss == eval_rows[0].loss

    def test_deterministic_replay(self):
        from projeq import serialize

        a = self._tiny_spinor_setup(lr=1e-2)
        b = self._tiny_spinor_setup(lr=1e-2)
        assert serialize.metrics_to_csv(a.metrics) == serialize.metrics_to_csv(b.metrics)

    def test_training_reduces_loss(self):
        res = self._tiny_spinor_setup(lr=1e-2, epochs=30)
        rows = res.rows_for("train")
        assert rows[-1].loss < rows[0].loss * 0.8


class TestEndToEndGradient:
    def test_vierernet_gradient_against_finite_differences(self):
        # full loss gradient on a 2-channel 8x8 net, every parameter
        rng = np.random.default_rng(4)
        net = vierernet.ViererNet(widths=(2, 2), classes=11, seed=5)
        images = rng.normal(size=(2, 8, 8))
        labels = np.array([3, 10])

        def loss_value():
            return float(net.loss(images, labels, training=True).value)

        loss = net.loss(images, labels, training=True)
        ad.backward(loss)
        h = 1e-5
        for name, p in net.params().items():
            got = p.grad
            flat = p.value.reshape(-1)
            for i in range(0, flat.size, max(1, flat.size // 7)):  # probe a spread of entries
                orig = flat[i]
                flat[i] = orig + h
                lp = loss_value()
                flat[i] = orig - h
                lm = loss_value()
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                scale = max(abs(fd), 1e-3)
                assert abs(got.reshape(-1)[i] - fd) / scale < 1e-4, f"{name}[{i}]"

    def test_baseline_gradient_against_finite_differences(self):
        rng = np.random.default_rng(5)
        net = vierernet.BaselineCNN(widths=(2, 2), classes=5, seed=6)
        images = rng.normal(size=(2, 8, 8))
        labels = np.array([0, 4])

        loss = net.loss(images, labels, training=True)
        ad.backward(loss)
        h = 1e-5

        def loss_value():
            return float(net.loss(images, labels, training=True).value)

        for name, p in net.params().items():
            flat = p.value.reshape(-1)
            for i in range(0, flat.size, max(1, flat.size // 5)):
                orig = flat[i]
                flat[i] = orig + h
                lp = loss_value()
                flat[i] = orig - h
                lm = loss_value()
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                scale = max(abs(fd), 1e-3)
                assert abs(p.grad.reshape(-1)[i] - fd) / scale < 1e-4, f"{name}[{i}]"

    def test_spinor_gradient_against_finite_differences(self):
        ds = data.gen_spinor_dataset(4, 0.1, seed=7, rotate=False)
        net = spinornet.SpinorNet("spinors-as-features", seed=8)

        def loss_value():
            return float(net.loss(ds.positions, ds.spinors, ds.targets).value)

        loss = net.loss(ds.positions, ds.spinors, ds.targets)
        ad.backward(loss)
        h = 1e-6
        for name, p in net.params().items():
            if p.grad is None:
                continue
            flat = p.value.reshape(-1)
            for i in range(0, flat.size, max(1, flat.size // 4)):
                orig = flat[i]
                flat[i] = orig + h
                lp = loss_value()
                flat[i] = orig - h
                lm = loss_value()
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                scale = max(abs(fd), 1e-2)
                assert abs(p.grad.reshape(-1)[i] - fd) / scale < 1e-4, f"{name}[{i}]"


class TestBatchNormTraining:
    def test_running_stats_updated_only_in_training(self):
        net = vierernet.BaselineCNN(widths=(2,), classes=3, seed=9)
        rng = np.random.default_rng(6)
        images = rng.normal(size=(4, 8, 8))
        before = net.bn.running_mean.copy()
        net.logits(images, training=False)
        assert np.array_equal(before, net.bn.running_mean)
        net.logits(images, training=True)
        assert not np.array_equal(before, net.bn.running_mean)
