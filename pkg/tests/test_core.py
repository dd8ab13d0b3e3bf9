import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from irlmrac import core
from irlmrac.core import ActorGains, CostWeights, CriticWeights, ErrorWindow
from irlmrac.errors import ConfigError, SingularCriticError
from irlmrac.oracle import fd_gradient

# squares of subnormals underflow to zero
finite = st.floats(-10.0, 10.0).filter(lambda v: v == 0 or abs(v) > 1e-100)
vec3 = st.lists(finite, min_size=3, max_size=3).map(np.array)


def spd(rng, n, lo=0.1):
    M = rng.normal(size=(n, n))
    return M @ M.T + lo * np.eye(n)


def critic_with_greedy(K, h_uu=2.0):
    H = np.eye(4)
    H[3, 3] = h_uu
    H[3, :3] = H[:3, 3] = -h_uu * np.asarray(K)
    return CriticWeights(H)


def test_push_error_sequence():
    w = ErrorWindow()
    w = core.push_error(w, 1.0)
    assert w == ErrorWindow(1.0, 0.0, 0.0)
    w = core.push_error(w, 2.0)
    assert w == ErrorWindow(2.0, 1.0, 0.0)
    w = core.push_error(w, 3.0)
    assert w == ErrorWindow(3.0, 2.0, 1.0)
    np.testing.assert_array_equal(w.vector, [3.0, 2.0, 1.0])


@pytest.mark.parametrize("E,u,expected", [
    ([0, 0, 0], 0.0, 0.0),
    ([1, 0, 0], 0.0, 0.5),
    ([1, 1, 1], 2.0, 3.5),
])
def test_utility_examples(E, u, expected):
    assert core.utility(np.array(E, float), u, CostWeights.identity()) == pytest.approx(expected)


@pytest.mark.parametrize("scale,E,u,expected", [
    (1.0, [0, 0, 0], 0.0, 0.0),
    (1.0, [1, 0, 0], 1.0, 1.0),
    (2.0, [1, 2, 0], 0.0, 5.0),
])
def test_value_examples(scale, E, u, expected):
    critic = CriticWeights(scale * np.eye(4))
    assert core.value(critic, np.array(E, float), u) == pytest.approx(expected)


@pytest.mark.parametrize("K,E,expected", [
    ([0, 0, 0], [4, -2, 9], 0.0),
    ([1, 2, 3], [1, 1, 1], 6.0),
    ([-1.5, 0, 0], [2, 5, 7], -3.0),
])
def test_policy_examples(K, E, expected):
    assert core.policy(ActorGains(K), ErrorWindow(*E)) == pytest.approx(expected)


def test_greedy_examples():
    np.testing.assert_array_equal(core.greedy_gains(CriticWeights.identity()).K, [0, 0, 0])
    H = np.eye(4)
    H[3, 3] = 2.0
    H[3, 0] = H[0, 3] = 1.0
    np.testing.assert_allclose(core.greedy_gains(CriticWeights(H)).K, [-0.5, 0, 0])


def test_greedy_rejects_singular():
    H = np.eye(4)
    H[3, 3] = 1e-9
    with pytest.raises(SingularCriticError):
        core.greedy_gains(CriticWeights(H))


def test_critic_target_examples():
    assert core.critic_target(0.0, 0.0) == 0.0
    assert core.critic_target(0.05, 1.0) == pytest.approx(1.05)


def test_critic_update_hand_example():
    critic = CriticWeights.identity()
    E, u, target = np.array([1.0, 0, 0]), 0.0, 0.0
    new = core.update_critic(critic, E, u, target, 0.5)
    expected = np.eye(4)
    expected[0, 0] = 0.75
    np.testing.assert_allclose(new.H, expected, rtol=0, atol=1e-15)

    # same step from central differences of 1/2 (V - target)^2; the step is -2 * rate * grad
    def loss(H):
        z = np.r_[E, u]
        return 0.5 * (0.5 * z @ H @ z - target) ** 2

    grad = fd_gradient(loss, critic.H, eps=1e-6)
    np.testing.assert_allclose(critic.H - 2 * 0.5 * grad, expected, rtol=0, atol=1e-9)


def test_actor_update_hand_example():
    critic = critic_with_greedy([1.0, 0, 0])
    E = np.array([1.0, 0, 0])
    assert core.greedy_gains(critic).K @ E == pytest.approx(1.0)
    new = core.update_actor(ActorGains.zeros(), 0.0, E, critic, 0.5)
    np.testing.assert_allclose(new.K, [0.5, 0, 0], rtol=0, atol=1e-15)

    def loss(K):
        return 0.5 * (K @ E - 1.0) ** 2

    grad = fd_gradient(loss, np.zeros(3), eps=1e-6)
    np.testing.assert_allclose(-0.5 * grad, [0.5, 0, 0], atol=1e-9)


def test_update_noops():
    rng = np.random.default_rng(3)
    critic = CriticWeights(spd(rng, 4))
    E, u = rng.normal(size=3), 0.7
    v = core.value(critic, E, u)
    for mode in core.MODES:
        assert np.array_equal(core.update_critic(critic, E, u, v, 0.5, mode).H, critic.H)
        assert np.array_equal(core.update_critic(critic, E, u, v + 3.0, 0.0, mode).H, critic.H)
    actor = ActorGains(rng.normal(size=3))
    u_target = core.greedy_gains(critic).K @ E
    for mode in core.MODES:
        same = core.update_actor(actor, u_target, E, critic, 0.5, mode)
        np.testing.assert_array_equal(same.K, actor.K)
        zero_E = core.update_actor(actor, 5.0, np.zeros(3), critic, 0.5, mode)
        np.testing.assert_array_equal(zero_E.K, actor.K)
        zero_rate = core.update_actor(actor, 5.0, E, critic, 0.0, mode)
        np.testing.assert_array_equal(zero_rate.K, actor.K)


def test_as_printed_uses_squared_residual():
    critic = CriticWeights.identity()
    E = np.array([1.0, 0, 0])
    new = core.update_critic(critic, E, 0.0, 0.0, 0.5, mode="as_printed")
    # delta = 0.5 so the factor is 0.5 * 0.25
    assert new.H[0, 0] == pytest.approx(1 - 0.5 * 0.125)
    critic = critic_with_greedy([1.0, 0, 0])
    new = core.update_actor(ActorGains.zeros(), 0.0, E, critic, 0.5, mode="as_printed")
    np.testing.assert_allclose(new.K, [-0.25, 0, 0])


def test_normalized_step_is_scaled():
    critic = CriticWeights.identity()
    E = np.array([1.0, 0, 0])
    new = core.update_critic(critic, E, 0.0, 0.0, 0.5, normalize=True)
    assert new.H[0, 0] == pytest.approx(1 - 0.5 * 0.5 / 4)
    actor = core.update_actor(ActorGains.zeros(), 0.0, E, critic_with_greedy([1.0, 0, 0]),
                              0.5, normalize=True)
    np.testing.assert_allclose(actor.K, [0.25, 0, 0])


def test_update_enforces_symmetry_and_floor():
    critic = CriticWeights.identity()
    new = core.update_critic(critic, np.zeros(3), 10.0, -1e6, 0.9)
    assert new.H_uu == core.H_MIN
    np.testing.assert_array_equal(new.H, new.H.T)


def test_rates_and_modes_validated():
    critic = CriticWeights.identity()
    with pytest.raises(ConfigError):
        core.update_critic(critic, np.ones(3), 0.0, 0.0, 1.5)
    with pytest.raises(ConfigError):
        core.update_critic(critic, np.ones(3), 0.0, 0.0, 0.5, mode="other")
    with pytest.raises(ConfigError):
        core.update_actor(ActorGains.zeros(), 0.0, np.ones(3), critic, -0.1)


@pytest.mark.parametrize("Q,R", [
    (np.zeros((3, 3)), 1.0),
    (np.diag([1.0, 0.0, 1.0]), 1.0),
    (np.eye(3), 0.0),
    (np.array([[1, 0.5, 0], [0, 1, 0], [0, 0, 1]]), 1.0),
])
def test_cost_weights_invariants(Q, R):
    with pytest.raises(ConfigError):
        CostWeights(Q, R)


def test_check_convergence_examples():
    L, tol = 10, 1e-8
    H = np.eye(4)
    assert core.check_convergence([H] * (L + 2), L, tol)
    for n in range(L + 2):
        assert not core.check_convergence([H] * n, L, tol)
    jump = [H] * (L + 2)
    bumped = H.copy()
    bumped[0, 0] += 2 * tol
    jump[5] = bumped
    assert not core.check_convergence(jump, L, tol)
    # a jump older than the window no longer matters
    assert core.check_convergence([bumped] + [H] * (L + 2), L, tol)


@settings(max_examples=100, deadline=None)
@given(E=vec3, u=finite, seed=st.integers(0, 2**32 - 1))
def test_utility_nonnegative_zero_iff_origin(E, u, seed):
    rng = np.random.default_rng(seed)
    w = CostWeights(spd(rng, 3), rng.uniform(0.1, 5))
    U = core.utility(E, u, w)
    assert U >= 0
    if np.any(E) or u:
        assert U > 0
    assert core.utility(np.zeros(3), 0.0, w) == 0.0


@settings(max_examples=100, deadline=None)
@given(E=vec3, u=finite, seed=st.integers(0, 2**32 - 1))
def test_value_positive_definite(E, u, seed):
    critic = CriticWeights(spd(np.random.default_rng(seed), 4))
    V = core.value(critic, E, u)
    assert V >= 0
    if np.any(E) or u:
        assert V > 0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_greedy_scale_invariant(seed, c):
    H = spd(np.random.default_rng(seed), 4)
    k1 = core.greedy_gains(CriticWeights(H)).K
    k2 = core.greedy_gains(CriticWeights(c * H)).K
    np.testing.assert_allclose(k1, k2, rtol=1e-10, atol=1e-12)


@given(K=vec3, E=vec3, a=finite)
def test_policy_linear(K, E, a):
    actor = ActorGains(K)
    assert core.policy(actor, a * E) == pytest.approx(a * core.policy(actor, E),
                                                      rel=1e-9, abs=1e-9)


def _cos(a, b):
    a, b = np.ravel(a), np.ravel(b)
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_critic_step_descends(seed):
    rng = np.random.default_rng(seed)
    critic = CriticWeights(spd(rng, 4))
    E, u, target = rng.normal(size=3), rng.normal(), rng.normal() * 3
    z = np.r_[E, u]
    delta = core.value(critic, E, u) - target
    assume(abs(delta) > 1e-3)

    def loss(H):
        return 0.5 * (0.5 * z @ H @ z - target) ** 2

    step = core.update_critic(critic, E, u, target, 1e-3).H - critic.H
    assume(critic.H[3, 3] + step[3, 3] > core.H_MIN)
    assert _cos(step, -fd_gradient(loss, critic.H, eps=1e-6)) >= 1 - 1e-6
    small = core.update_critic(critic, E, u, target, 1e-6)
    assert loss(small.H) <= loss(critic.H)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_actor_step_descends(seed):
    rng = np.random.default_rng(seed)
    critic = CriticWeights(spd(rng, 4))
    actor = ActorGains(rng.normal(size=3))
    E = rng.normal(size=3)
    u_hat = core.policy(actor, E)
    u_target = core.greedy_gains(critic).K @ E
    assume(abs(u_hat - u_target) > 1e-3)

    def loss(K):
        return 0.5 * (K @ E - u_target) ** 2

    step = core.update_actor(actor, u_hat, E, critic, 1e-3).K - actor.K
    assert _cos(step, -fd_gradient(loss, actor.K, eps=1e-6)) >= 1 - 1e-6
