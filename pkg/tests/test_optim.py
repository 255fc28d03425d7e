import numpy as np
import pytest

from eco.numerics import RngKey
from eco.optim import (
    AdamState,
    Eco,
    ExactInjection,
    Hyper,
    MasterWeights,
    Naive,
    ParamGroup,
    SgdmState,
    adam_update,
    eco_quantize_adam,
    eco_quantize_sgdm,
    exact_injection_init,
    exact_injection_sgdm_step,
    injection_strength,
    sgdm_update,
    train_step,
)
from eco.quantize import FixedStep, Identity, QuantSpec, Rounding


FIXED = QuantSpec(FixedStep(1.0))
IDENT = QuantSpec(Identity())


class TestSgdm:
    def test_hand_example(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta_tilde, m_tilde = sgdm_update(np.array([2.0]), np.array([0.0]), np.array([1.0]), h)
        assert m_tilde[0] == pytest.approx(0.5)
        assert theta_tilde[0] == pytest.approx(1.75)

    def test_beta_to_zero_limit_degenerates_to_sgd(self):
        h = Hyper(eta=0.1, beta1=1e-12)
        g = np.array([2.0])
        theta_tilde, m_tilde = sgdm_update(np.array([1.0]), np.array([0.5]), g, h)
        assert m_tilde[0] == pytest.approx(2.0, rel=1e-9)
        assert theta_tilde[0] == pytest.approx(1.0 - 0.1 * 2.0, rel=1e-9)

    def test_zero_gradient_fixed_point(self):
        h = Hyper(eta=0.3, beta1=0.7)
        theta_tilde, m_tilde = sgdm_update(np.array([4.0]), np.zeros(1), np.zeros(1), h)
        assert theta_tilde[0] == 4.0
        assert m_tilde[0] == 0.0

    def test_shape_mismatch(self):
        h = Hyper(eta=0.1)
        with pytest.raises(ValueError):
            sgdm_update(np.zeros(2), np.zeros(2), np.zeros(3), h)


class TestInjectionStrength:
    def test_hand_values(self):
        assert injection_strength(0.5, 0.5) == pytest.approx(-2.0)
        assert injection_strength(0.1, 0.9) == pytest.approx(-10.0 / 9.0)

    def test_degenerate_beta_rejected(self):
        with pytest.raises(ValueError):
            injection_strength(0.1, 0.0)
        with pytest.raises(ValueError):
            injection_strength(0.1, 1.0)
        with pytest.raises(ValueError):
            Hyper(eta=0.1, beta1=1.0)


class TestEcoSgdm:
    def test_identity_grid_no_op(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta_hat, m_hat = eco_quantize_sgdm(np.array([1.75]), np.array([0.5]), h, IDENT, RngKey())
        assert theta_hat[0] == 1.75
        assert m_hat[0] == 0.5

    def test_hand_example(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta_hat, m_hat = eco_quantize_sgdm(np.array([1.75]), np.array([0.5]), h, FIXED, RngKey())
        assert theta_hat[0] == 2.0
        assert m_hat[0] == pytest.approx(1.0)


class TestAdam:
    def test_null_update(self):
        h = Hyper(eta=0.1, beta1=0.9, beta2=0.99)
        st = AdamState(m=np.zeros(1), v=np.zeros(1), t=0, mode=Naive())
        theta_tilde, *_ = adam_update(np.array([3.0]), st, np.zeros(1), h)
        assert theta_tilde[0] == 3.0

    def test_hand_example(self):
        h = Hyper(eta=0.25, beta1=0.5, beta2=0.5, epsilon=0.0)
        st = AdamState(m=np.zeros(1), v=np.zeros(1), t=0, mode=Naive())
        theta_tilde, m_tilde, v_next, t_next = adam_update(np.array([1.0]), st, np.array([1.0]), h)
        assert t_next == 1
        assert m_tilde[0] == pytest.approx(0.5)
        assert v_next[0] == pytest.approx(0.5)
        assert theta_tilde[0] == pytest.approx(0.75)

    def test_second_moment_matches_scalar_reference(self):
        # 20-step reference loop with beta2 near one
        h = Hyper(eta=0.01, beta1=0.9, beta2=0.999, epsilon=1e-8)
        rng = np.random.default_rng(0)
        gs = rng.normal(size=20)
        st = AdamState(m=np.zeros(1), v=np.zeros(1), t=0, mode=Naive())
        theta = np.array([0.5])
        v_ref = 0.0
        for g in gs:
            theta, m, v, t = adam_update(theta, st, np.array([g]), h)
            st = AdamState(m=m, v=v, t=t, mode=Naive())
            v_ref = 0.999 * v_ref + 0.001 * g * g
        assert st.v[0] == pytest.approx(v_ref, rel=1e-12)
        assert v_ref == pytest.approx((1 - 0.999) * sum(
            0.999 ** (19 - k) * g * g for k, g in enumerate(gs)), rel=1e-12)

    def test_weight_decay_decoupled(self):
        h = Hyper(eta=0.25, beta1=0.5, beta2=0.5, epsilon=0.0, weight_decay=0.1)
        st = AdamState(m=np.zeros(1), v=np.zeros(1), t=0, mode=Naive())
        theta_tilde, *_ = adam_update(np.array([1.0]), st, np.array([1.0]), h)
        assert theta_tilde[0] == pytest.approx(0.75 - 0.25 * 0.1 * 1.0)


class TestEcoAdam:
    def test_identity_grid_no_op(self):
        h = Hyper(eta=0.25, beta1=0.5, beta2=0.5, epsilon=0.0)
        theta_hat, m_hat = eco_quantize_adam(np.array([0.75]), np.array([0.5]),
                                             np.array([0.5]), 1, h, IDENT, RngKey())
        assert m_hat[0] == 0.5

    def test_hand_example(self):
        h = Hyper(eta=0.25, beta1=0.5, beta2=0.5, epsilon=0.0)
        theta_hat, m_hat = eco_quantize_adam(np.array([0.75]), np.array([0.5]),
                                             np.array([0.5]), 1, h, FIXED, RngKey())
        assert theta_hat[0] == 1.0
        assert m_hat[0] == pytest.approx(1.0)

    def test_reduces_to_sgdm_with_effective_step(self):
        # uniform second moment and saturated bias corrections: the adaptive
        # step is a scalar, so the injection must match the SGDM rule at the
        # equivalent effective learning rate
        h = Hyper(eta=0.01, beta1=0.9, beta2=0.5, epsilon=0.0)
        t = 60  # beta1^t and beta2^t are negligible
        c = 0.7
        v_next = np.full(3, c * c)
        theta_tilde = np.array([0.31, -1.27, 0.8])
        m_tilde = np.array([0.1, -0.2, 0.3])
        theta_a, m_a = eco_quantize_adam(theta_tilde, m_tilde, v_next, t, h, FIXED, RngKey())
        bc1 = 1 - h.beta1 ** t
        eta_eff = h.eta / (bc1 * c)
        h_eff = Hyper(eta=eta_eff, beta1=h.beta1)
        theta_s, m_s = eco_quantize_sgdm(theta_tilde, m_tilde, h_eff, FIXED, RngKey())
        assert np.array_equal(theta_a, theta_s)
        np.testing.assert_allclose(m_a, m_s, rtol=1e-12)

    def test_exact_injection_not_supported(self):
        with pytest.raises(ValueError):
            AdamState(m=np.zeros(1), v=np.zeros(1), t=0,
                      mode=ExactInjection(prev_error=np.zeros(1)))


class TestExactInjection:
    def test_init_on_grid(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta_hat, m_im, e0 = exact_injection_init(np.array([2.0]), np.array([0.3]), h, FIXED, RngKey())
        assert theta_hat[0] == 2.0
        assert e0[0] == 0.0
        assert m_im[0] == pytest.approx(0.3)

    def test_init_hand_example(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta_hat, m_im, e0 = exact_injection_init(np.array([1.75]), np.zeros(1), h, FIXED, RngKey())
        assert theta_hat[0] == 2.0
        assert e0[0] == pytest.approx(-0.25)
        assert m_im[0] == pytest.approx(1.0)

    def test_init_affine_in_m0(self):
        h = Hyper(eta=0.5, beta1=0.5)
        _, m_a, _ = exact_injection_init(np.array([1.75]), np.array([0.2]), h, FIXED, RngKey())
        _, m_b, _ = exact_injection_init(np.array([1.75]), np.array([1.2]), h, FIXED, RngKey())
        assert (m_b - m_a)[0] == pytest.approx(1.0)

    def test_identity_grid_reduces_to_sgdm(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta = np.array([2.0])
        g = np.array([1.0])
        theta_hat, m_next, err = exact_injection_sgdm_step(
            theta, np.zeros(1), np.zeros(1), g, h, IDENT, RngKey())
        ref_theta, ref_m = sgdm_update(theta, np.zeros(1), g, h)
        assert np.array_equal(theta_hat, ref_theta)
        np.testing.assert_allclose(m_next, ref_m, rtol=1e-15)
        assert err[0] == 0.0

    def test_weight_decay_rejected(self):
        h = Hyper(eta=0.5, beta1=0.5, weight_decay=0.1)
        with pytest.raises(ValueError):
            exact_injection_sgdm_step(np.zeros(1), np.zeros(1), np.zeros(1),
                                      np.zeros(1), h, FIXED, RngKey())


def _quadratic_grad(H, center):
    def grad_fn(thetas):
        d = thetas[0] - center
        g = H @ d
        return 0.5 * float(d @ g), [g]
    return grad_fn


class TestTrainStep:
    def _groups(self, mode, theta0, spec):
        state = SgdmState(m=np.zeros_like(theta0), mode=mode)
        return [ParamGroup("theta", theta0.copy(), state, spec, 0)]

    def test_mw_identity_equals_unquantized(self):
        rng = np.random.default_rng(0)
        H = np.diag([1.0, 0.5])
        center = rng.normal(size=2)
        theta = rng.normal(size=2)
        h = Hyper(eta=0.1, beta1=0.9)
        groups = self._groups(MasterWeights(master=theta.copy()), theta, IDENT)
        ref_theta, ref_m = theta.copy(), np.zeros(2)
        for t in range(50):
            groups, _ = train_step(groups, _quadratic_grad(H, center), h, step=t, seed=0)
            g = H @ (ref_theta - center)
            ref_m = 0.9 * ref_m + (1 - 0.9) * g
            ref_theta = ref_theta - 0.1 * ref_m
        assert np.array_equal(groups[0].theta, ref_theta)

    def test_naive_scalar_hand_step(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta = np.array([2.0])
        groups = self._groups(Naive(), theta, FIXED)

        def grad_fn(thetas):
            return 0.0, [np.array([1.0])]

        groups, info = train_step(groups, grad_fn, h, step=0, seed=0)
        # theta_tilde = 2 - 0.5*0.5 = 1.75 -> rounds to 2, momentum untouched
        assert groups[0].theta[0] == 2.0
        assert groups[0].state.m[0] == pytest.approx(0.5)

    def test_eco_scalar_hand_step(self):
        h = Hyper(eta=0.5, beta1=0.5)
        groups = self._groups(Eco(), np.array([2.0]), FIXED)

        def grad_fn(thetas):
            return 0.0, [np.array([1.0])]

        groups, info = train_step(groups, grad_fn, h, step=0, seed=0)
        assert groups[0].theta[0] == 2.0
        assert groups[0].state.m[0] == pytest.approx(1.0)

    def test_clipping_applied_before_momentum(self):
        h = Hyper(eta=0.1, beta1=0.5, clip_norm=1.0)
        groups = self._groups(Naive(), np.zeros(2), IDENT)

        def grad_fn(thetas):
            return 0.0, [np.array([3.0, 4.0])]

        groups, info = train_step(groups, grad_fn, h, step=0, seed=0)
        assert info.clip_scale == pytest.approx(0.2)
        assert np.linalg.norm(groups[0].state.m / 0.5) == pytest.approx(1.0)

    def test_eco_identity_equals_plain_over_trajectory(self):
        rng = np.random.default_rng(3)
        H = np.diag([1.0, 0.3, 0.7])
        center = rng.normal(size=3)
        theta = rng.normal(size=3)
        h = Hyper(eta=0.05, beta1=0.8)
        eco_groups = self._groups(Eco(), theta, IDENT)
        naive_groups = self._groups(Naive(), theta, IDENT)
        for t in range(200):
            eco_groups, _ = train_step(eco_groups, _quadratic_grad(H, center), h, step=t, seed=1)
            naive_groups, _ = train_step(naive_groups, _quadratic_grad(H, center), h, step=t, seed=1)
        assert np.array_equal(eco_groups[0].theta, naive_groups[0].theta)
        assert np.array_equal(eco_groups[0].state.m, naive_groups[0].state.m)

    def test_closed_loop_identity_every_step(self):
        # theta_hat' = theta_hat - eta*m_hat' - e'/beta holds along an
        # error-injected run on any grid
        rng = np.random.default_rng(4)
        H = np.diag(np.linspace(0.2, 1.0, 5))
        center = rng.uniform(-0.6, 0.6, size=5)
        eta, beta = 0.1, 0.9
        h = Hyper(eta=eta, beta1=beta)
        spec = QuantSpec(FixedStep(0.05), rounding=Rounding.SR)
        groups = self._groups(Eco(), rng.normal(size=5), spec)
        for t in range(300):
            prev_theta = groups[0].theta
            groups, info = train_step(groups, _quadratic_grad(H, center), h, step=t, seed=2)
            err = info.errors["theta"]
            lhs = groups[0].theta
            rhs = prev_theta - eta * groups[0].state.m - err / beta
            np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_determinism_across_runs(self):
        rng = np.random.default_rng(5)
        H = np.diag([1.0, 0.4])
        center = rng.normal(size=2)
        theta = rng.normal(size=2)
        h = Hyper(eta=0.1, beta1=0.9)
        spec = QuantSpec(FixedStep(0.05), rounding=Rounding.SR)
        finals = []
        for _ in range(2):
            groups = self._groups(Eco(), theta, spec)
            for t in range(100):
                groups, _ = train_step(groups, _quadratic_grad(H, center), h, step=t, seed=7)
            finals.append(groups[0].theta.copy())
        assert np.array_equal(finals[0], finals[1])


class TestExactEquivalenceShort:
    def test_on_grid_start_first_step_matches_mw(self):
        h = Hyper(eta=0.5, beta1=0.5)
        theta0 = np.array([2.0, -1.0])
        g = np.array([0.4, 0.3])
        theta_im, m_im, e0 = exact_injection_init(theta0, np.zeros(2), h, FIXED, RngKey(step=0))
        assert np.array_equal(theta_im, theta0)
        np.testing.assert_array_equal(m_im, np.zeros(2))

        th_im, m_next, e1 = exact_injection_sgdm_step(
            theta_im, m_im, e0, g, h, FIXED, RngKey(step=1))
        # master-weight reference
        theta_tilde, m_tilde = sgdm_update(theta0, np.zeros(2), g, h)
        from eco.quantize import quantize
        mw_hat = quantize(theta_tilde, FIXED, RngKey(step=1)).quantized
        assert np.array_equal(th_im, mw_hat)
