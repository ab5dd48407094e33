"""Shock profiles and boundary layers with independent verification.

Shock profiles are computed two ways that share no linear algebra:

* through the travelling-wave singular ODE from `reduction` (shooting in
  the 5-dimensional extended state), and
* through the once-integrated conservation laws in flux form, a plain
  2-dimensional ODE in (v, theta) built directly from the gas model.

The second route (`gilbarg_oracle`) exists so results of the first can be
cross-checked; `compare_profiles` reparametrizes both by a monotone
component and measures the sup deviation. `flux_constants` checks the
three integrals of motion along any profile, and `boundary_layer` builds
steady layers by backward integration from a decaying direction of the
endpoint linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DomainError,
    NoConnectionError,
    NoConvergenceError,
    NoDecayingDirectionError,
    NonMonotoneError,
)
from .gas import GasModel, State, conserved, euler_fluxes, internal_energy, pressure, sound_speed
from .reduction import (
    SINGULARITY_GUARD,
    ExtendedState,
    SingularODE,
    extended_residual,
    steady_singular_ode,
    tw_singular_ode,
)
from .sode import (
    TERM_EQUILIBRIUM,
    TERM_REACHED_END,
    TERM_SINGULARITY,
    TERM_STOPPED,
    LinearizationReport,
    Trajectory,
    TrajectoryStats,
    integrate_direct,
    integrate_rescaled,
    linearize,
)


def _sup(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))


def char_speed(gas: GasModel, state: State, family: int) -> float:
    """Characteristic speed of the chosen family: v - c, v, or v + c."""
    if family not in (1, 2, 3):
        raise DomainError(f"family must be 1, 2 or 3, got {family}")
    c = sound_speed(gas, state)
    return {1: state.v - c, 2: state.v, 3: state.v + c}[family]


@dataclass(frozen=True)
class RHPair:
    """Pair of states joined by the jump conditions at speed sigma."""

    left: State
    right: State
    sigma: float
    family: int
    strength: float


def rh_residual(gas: GasModel, pair: RHPair) -> np.ndarray:
    """Jump-condition residual [f(U+) - f(U-)] - sigma [g(U+) - g(U-)]."""
    df = euler_fluxes(gas, pair.right) - euler_fluxes(gas, pair.left)
    dg = conserved(gas, pair.right) - conserved(gas, pair.left)
    return df - pair.sigma * dg


def lax_inequalities(gas: GasModel, pair: RHPair) -> dict:
    """Family characteristic speeds on both sides against sigma."""
    lam_left = char_speed(gas, pair.left, pair.family)
    lam_right = char_speed(gas, pair.right, pair.family)
    return {
        "lambda_left": lam_left,
        "lambda_right": lam_right,
        "sigma": pair.sigma,
        "satisfied": lam_right < pair.sigma < lam_left or pair.strength == 0.0,
    }


def _flux_jacobian(gas: GasModel, st: State) -> np.ndarray:
    R, rho, v, theta = gas.R, st.rho, st.v, st.theta
    e_th = R / (gas.gamma - 1.0)
    e = e_th * theta
    H = 0.5 * rho * v * v + rho * e + R * rho * theta
    return np.array([
        [v, rho, 0.0],
        [v * v + R * theta, 2.0 * rho * v, R * rho],
        [v * (0.5 * v * v + e + R * theta), H + rho * v * v, v * rho * (e_th + R)],
    ])


def _cons_jacobian(gas: GasModel, st: State) -> np.ndarray:
    R, rho, v, theta = gas.R, st.rho, st.v, st.theta
    e_th = R / (gas.gamma - 1.0)
    return np.array([
        [1.0, 0.0, 0.0],
        [v, rho, 0.0],
        [e_th * theta + 0.5 * v * v, rho * v, rho * e_th],
    ])


def _conjugate_state(gas: GasModel, U_minus: State, sigma: float) -> tuple[float, float, float]:
    """Closed-form second root of the jump conditions in the shock frame.

    With m = rho u and P = m u + p fixed by the left state, the relative
    velocity solves a quadratic whose other root is
    u+ = 2 gamma P / ((gamma + 1) m) - u-. Used as the Newton seed.
    """
    u_m = U_minus.v - sigma
    m = U_minus.rho * u_m
    if m == 0.0:
        raise DomainError("left state moves with the wave, no conjugate state")
    p_m, _, _ = pressure(gas, U_minus.rho, U_minus.theta)
    P = m * u_m + p_m
    u_p = 2.0 * gas.gamma * P / ((gas.gamma + 1.0) * m) - u_m
    if u_p * u_m <= 0.0:
        raise DomainError("conjugate state crosses the sonic frame, no admissible root")
    rho_p = m / u_p
    theta_p = u_p * (P / m - u_p) / gas.R
    return rho_p, u_p + sigma, theta_p


def solve_rh(
    gas: GasModel,
    U_minus: State,
    family: int,
    strength: float,
    tol: float = 1e-13,
    max_iter: int = 50,
) -> RHPair:
    """Solve the jump conditions for (rho+, v+, theta+, sigma).

    The wave speed is pinned by sigma = lambda_family(U-) - strength and
    the remaining three unknowns are found by Newton iteration on the
    jump-condition residual, seeded with the closed-form conjugate state.
    Family 2 (the contact family) is rejected: it is linearly degenerate
    and admits no compressive connection. Negative strengths are rejected
    because the resulting pair violates the entropy inequalities.
    """
    if family == 2:
        raise DomainError("family 2 is the contact family; no shock pair exists")
    if family not in (1, 3):
        raise DomainError(f"family must be 1 or 3, got {family}")
    strength = float(strength)
    if strength < 0.0:
        raise DomainError("strength must be nonnegative; expansions violate the entropy conditions")
    lam_minus = char_speed(gas, U_minus, family)
    if strength == 0.0:
        return RHPair(left=U_minus, right=U_minus, sigma=lam_minus, family=family, strength=0.0)
    sigma = lam_minus - strength

    rho, v, theta = _conjugate_state(gas, U_minus, sigma)
    f_m = euler_fluxes(gas, U_minus)
    g_m = conserved(gas, U_minus)
    target_sigma = sigma
    q = np.array([rho, v, theta, sigma])
    converged = False
    for _ in range(max_iter):
        if not (q[0] > 0.0 and q[2] > 0.0):
            raise NoConvergenceError("Newton iterates left the physical region")
        st = State(q[0], q[1], q[2])
        res = np.empty(4)
        res[:3] = (euler_fluxes(gas, st) - f_m) - q[3] * (conserved(gas, st) - g_m)
        res[3] = q[3] - target_sigma
        if _sup(res) <= tol:
            converged = True
            break
        J = np.zeros((4, 4))
        J[:3, :3] = _flux_jacobian(gas, st) - q[3] * _cons_jacobian(gas, st)
        J[:3, 3] = -(conserved(gas, st) - g_m)
        J[3, 3] = 1.0
        q = q - np.linalg.solve(J, res)
    if not converged:
        raise NoConvergenceError(f"jump-condition Newton did not converge in {max_iter} iterations")

    U_plus = State(float(q[0]), float(q[1]), float(q[2]))
    if U_plus.rho < gas.c_rho:
        raise DomainError(
            f"right state density {U_plus.rho:.6g} fell below the vacuum bound {gas.c_rho:g}"
        )
    pair = RHPair(left=U_minus, right=U_plus, sigma=float(q[3]), family=family, strength=strength)
    if not lax_inequalities(gas, pair)["satisfied"]:
        raise DomainError("computed pair violates the entropy (Lax) inequalities")
    return pair


@dataclass(frozen=True)
class Profile:
    """A computed connection: trajectory plus endpoint data and diagnostics."""

    kind: str
    sigma: float
    left: ExtendedState
    right: ExtendedState
    trajectory: Trajectory
    diagnostics: dict


@dataclass(frozen=True)
class ShootOpts:
    """Controls for the travelling-wave shooting."""

    tol: float = 1e-10
    end_tol: float = 1e-6
    eps_rel: float = 1e-7
    x_max: float | None = None
    max_steps: int = 500_000
    retries: int = 2


@dataclass(frozen=True)
class LayerOpts:
    """Controls for the boundary-layer construction."""

    tol: float = 1e-10
    length: float | None = None
    tau_max: float | None = None
    max_steps: int = 500_000
    grow_cap: float = 0.5


def _constant_trajectory(U: np.ndarray, zeta_abs: float) -> Trajectory:
    stats = TrajectoryStats(
        n_accepted=0, n_rejected=0, n_fevals=0,
        min_abs_zeta=zeta_abs, zeta_sign_changes=0, h_final=0.0,
    )
    return Trajectory(
        mode="direct",
        ts=np.array([0.0]),
        Vs=np.array([U]),
        xs=np.array([0.0]),
        taus=None,
        termination=TERM_EQUILIBRIUM,
        stats=stats,
        dense=[],
    )


def _real_unit_eigenvector(report: LinearizationReport, index: int) -> np.ndarray:
    vec = report.eigenvectors[:, index]
    re = np.real(vec)
    if _sup(np.imag(vec)) > 1e-6 * max(_sup(re), 1e-300):
        raise NoConnectionError("selected eigendirection is genuinely complex")
    n = float(np.linalg.norm(re))
    if n == 0.0:
        raise NoConnectionError("degenerate eigendirection")
    return re / n


def max_extended_residual(ode: SingularODE, traj: Trajectory, guard: float = SINGULARITY_GUARD) -> tuple[float, int]:
    """Worst residual zeta U' - F over samples, U' from the right-hand side.

    Samples closer to the sonic set than the guard are skipped (the
    direct derivative is not defined there); the count is returned.
    """
    worst = 0.0
    skipped = 0
    for V in traj.Vs:
        z = ode.zeta_eval(V)
        if abs(z) <= guard:
            skipped += 1
            continue
        Uprime = ode.F_eval(V) / z
        worst = max(worst, _sup(extended_residual(ode, V, Uprime)))
    return worst, skipped


@dataclass(frozen=True)
class FluxRecord:
    """Per-sample flux integrals and their worst relative drift."""

    values: np.ndarray  # (n, 3): mass, momentum, energy flux per sample
    reference: np.ndarray  # (3,) endpoint values
    drift: float


def flux_constants(gas: GasModel, profile: Profile) -> FluxRecord:
    """Integrals m, m v + p - nu v_x, m (e + v^2/2) + v p - k theta_x - nu v v_x.

    Exact solutions keep all three constant; the reported drift is the
    worst per-sample deviation from the reference values, relative to
    max(|reference|, 1) per component. The reference is evaluated at the
    equilibrium endpoint (z = 0): for a layer that is the limit state,
    for a shock either endpoint gives the same values up to the
    jump-condition residual.
    """
    sigma = profile.sigma
    Vs = profile.trajectory.Vs
    n = Vs.shape[0]
    values = np.empty((n, 3))
    for i, U in enumerate(Vs):
        rho, v, theta, z1, z2 = (float(x) for x in U)
        p, _, _ = pressure(gas, rho, theta)
        e, _ = internal_energy(gas, theta)
        nu, _ = gas.nu_law(rho)
        k, _ = gas.k_law(rho)
        m = rho * (v - sigma)
        values[i, 0] = m
        values[i, 1] = m * v + p - nu * z1
        values[i, 2] = m * (e + 0.5 * v * v) + v * p - k * z2 - nu * v * z1
    ref = profile.right
    p_r, _, _ = pressure(gas, ref.rho, ref.theta)
    e_r, _ = internal_energy(gas, ref.theta)
    m_r = ref.rho * (ref.v - sigma)
    reference = np.array([
        m_r,
        m_r * ref.v + p_r,
        m_r * (e_r + 0.5 * ref.v ** 2) + ref.v * p_r,
    ])
    scale = np.maximum(np.abs(reference), 1.0)
    drift = float(np.max(np.abs(values - reference) / scale)) if n else 0.0
    return FluxRecord(values=values, reference=reference, drift=drift)


@dataclass(frozen=True)
class _ShootPlan:
    """Where to start, which way to integrate, and along which direction."""

    start: np.ndarray
    target: np.ndarray
    direction: float  # +1: integrate x upward from the left end, -1: downward from the right
    xi: np.ndarray
    rate: float  # spatial expansion rate of xi in the integration direction
    rates_start: list[float]
    rates_target: list[float]


def _direct_rates(report: LinearizationReport, zeta: float) -> list[tuple[int, float]]:
    """(index, Re lambda / zeta) for the non-center eigenvalues."""
    return [
        (i, float(report.eigenvalues[i].real / zeta))
        for i in range(len(report.eigenvalues))
        if i not in report.center
    ]


def _connection_plan(ode: SingularODE, U_left: np.ndarray, U_right: np.ndarray) -> _ShootPlan:
    """Pick the saddle endpoint and its one-dimensional shooting manifold.

    A connection between two hyperbolic rest points can only be tracked
    numerically out of the endpoint where it is locally unique: noise
    feeding the faster expanding direction of a node swamps any slow
    perturbation. So the shot starts at whichever endpoint has exactly
    one direction expanding toward the other end (backward integration
    when that is the right endpoint) and the receiving end, attracting
    in the integration direction, absorbs integration noise instead of
    amplifying it.
    """
    zl = ode.zeta_eval(U_left)
    zr = ode.zeta_eval(U_right)
    if zl == 0.0 or zr == 0.0:
        raise NoConnectionError("an endpoint sits on the sonic set; no direct shooting")
    rep_l = linearize(ode, U_left)
    rep_r = linearize(ode, U_right)
    mus_l = _direct_rates(rep_l, zl)
    mus_r = _direct_rates(rep_r, zr)
    expanding_left = [(i, m) for i, m in mus_l if m > 0.0]
    contracting_right = [(i, m) for i, m in mus_r if m < 0.0]
    if len(expanding_left) == 1:
        i, m = expanding_left[0]
        return _ShootPlan(
            start=U_left, target=U_right, direction=1.0,
            xi=_real_unit_eigenvector(rep_l, i), rate=m,
            rates_start=[m for _, m in mus_l], rates_target=[m for _, m in mus_r],
        )
    if len(contracting_right) == 1:
        i, m = contracting_right[0]
        return _ShootPlan(
            start=U_right, target=U_left, direction=-1.0,
            xi=_real_unit_eigenvector(rep_r, i), rate=-m,
            rates_start=[m for _, m in mus_r], rates_target=[m for _, m in mus_l],
        )
    raise NoConnectionError(
        "neither endpoint offers a one-dimensional shooting manifold; "
        f"rates left {[m for _, m in mus_l]}, right {[m for _, m in mus_r]}"
    )


def shock_profile(gas: GasModel, pair: RHPair, opts: ShootOpts = ShootOpts()) -> Profile:
    """Travelling-wave connection of an admissible pair by shooting.

    Integrates the travelling-wave singular ODE from the left endpoint
    perturbed along the slowest expanding non-center direction of its
    linearization (both perturbation signs tried, with a few shrinking
    retries of the perturbation size). Acoustic profiles stay away from
    the sonic set, so direct integration applies throughout. Accepts the
    shot whose trajectory comes within opts.end_tol of the right
    endpoint; raises NoConnectionError otherwise.
    """
    U_minus = np.array([pair.left.rho, pair.left.v, pair.left.theta, 0.0, 0.0])
    U_plus = np.array([pair.right.rho, pair.right.v, pair.right.theta, 0.0, 0.0])
    ode = tw_singular_ode(gas, pair.sigma)

    if pair.strength == 0.0:
        traj = _constant_trajectory(U_minus, abs(ode.zeta_eval(U_minus)))
        prof = Profile(
            kind="shock", sigma=pair.sigma,
            left=ExtendedState.from_array(U_minus), right=ExtendedState.from_array(U_plus),
            trajectory=traj,
            diagnostics={"strength": 0.0, "endpoint_mismatch": 0.0, "note": "zero-strength pair, constant profile"},
        )
        rec = flux_constants(gas, prof)
        prof.diagnostics.update(
            rh_residual_max=_sup(rh_residual(gas, pair)),
            flux_drift=rec.drift,
            extended_residual_max=0.0,
        )
        return prof

    plan = _connection_plan(ode, U_minus, U_plus)
    s_meas = _sup(U_plus - U_minus)
    base_eps = opts.eps_rel * s_meas
    rate_floor = min(abs(m) for m in plan.rates_start + plan.rates_target)
    L = opts.x_max if opts.x_max is not None else min(400.0 / rate_floor, 1e6)
    R_div = max(10.0 * s_meas, 0.5)
    capture = 0.5 * opts.end_tol

    def stop(x, V):
        d_target = _sup(V - plan.target)
        if d_target <= capture:
            return True
        return d_target > R_div and _sup(V - plan.start) > R_div

    attempts = []
    for attempt in range(opts.retries + 1):
        eps = base_eps / (16.0 ** attempt)
        for sgn in (1.0, -1.0):
            start = plan.start + sgn * eps * plan.xi
            traj = integrate_direct(
                ode, start, (0.0, plan.direction * L), tol=opts.tol,
                max_steps=opts.max_steps, stop_when=stop,
            )
            mismatch = _sup(traj.final_V - plan.target)
            attempts.append((sgn, eps, traj.termination, mismatch))
            if mismatch <= opts.end_tol and traj.termination in (
                TERM_STOPPED, TERM_EQUILIBRIUM, TERM_REACHED_END,
            ):
                ext_res, _ = max_extended_residual(ode, traj)
                prof = Profile(
                    kind="shock", sigma=pair.sigma,
                    left=ExtendedState.from_array(U_minus),
                    right=ExtendedState.from_array(U_plus),
                    trajectory=traj,
                    diagnostics={
                        "strength": pair.strength,
                        "family": pair.family,
                        "shoot_from": "left" if plan.direction > 0 else "right",
                        "sign": sgn,
                        "eps": eps,
                        "endpoint_mismatch": mismatch,
                        "termination": traj.termination,
                        "rate": plan.rate,
                        "rates_start": plan.rates_start,
                        "rates_target": plan.rates_target,
                        "extended_residual_max": ext_res,
                        "rh_residual_max": _sup(rh_residual(gas, pair)),
                        "lax": lax_inequalities(gas, pair)["satisfied"],
                    },
                )
                prof.diagnostics["flux_drift"] = flux_constants(gas, prof).drift
                return prof
    raise NoConnectionError(
        "no connection within budget; attempts (sign, eps, termination, mismatch): "
        + ", ".join(f"({s:+g}, {e:.1e}, {t}, {m:.2e})" for s, e, t, m in attempts)
    )


@dataclass(frozen=True)
class OracleTrajectory:
    """Flux-form (v, theta) trajectory with its conserved quantities.

    Built only from the gas model and the once-integrated conservation
    laws; shares nothing with the symmetrized matrices or the reduction.
    """

    gas: GasModel
    sigma: float
    m: float
    Pi: float
    Eflux: float
    trajectory: Trajectory

    def rhs(self, v: float, theta: float) -> tuple[float, float]:
        """Right-hand sides (v_x, theta_x) of the flux-form system."""
        u = v - self.sigma
        rho = self.m / u
        p, _, _ = pressure(self.gas, rho, theta)
        e, _ = internal_energy(self.gas, theta)
        nu, _ = self.gas.nu_law(rho)
        k, _ = self.gas.k_law(rho)
        v_x = (self.m * v + p - self.Pi) / nu
        th_x = (self.m * (e + 0.5 * v * v) + v * p - nu * v * v_x - self.Eflux) / k
        return v_x, th_x

    def table(self) -> dict[str, np.ndarray]:
        """Columns x, rho, v, theta, z1, z2 with z from the flux form."""
        xs = self.trajectory.xs
        vs = self.trajectory.Vs[:, 0]
        ths = self.trajectory.Vs[:, 1]
        rhos = self.m / (vs - self.sigma)
        z1 = np.empty_like(vs)
        z2 = np.empty_like(vs)
        for i in range(len(vs)):
            z1[i], z2[i] = self.rhs(float(vs[i]), float(ths[i]))
        return {"x": xs.copy(), "rho": rhos, "v": vs.copy(), "theta": ths.copy(), "z1": z1, "z2": z2}

    def extended_samples(self) -> tuple[np.ndarray, np.ndarray]:
        """(xs, (n,5) extended states) for residual cross-checks."""
        t = self.table()
        U = np.column_stack([t["rho"], t["v"], t["theta"], t["z1"], t["z2"]])
        return t["x"], U

    def extended_with_derivatives(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(xs, U, U') with all derivatives taken on the flux-form side.

        rho_x follows from differentiating rho = m / (v - sigma), and
        z1_x, z2_x from differentiating the flux-form right-hand sides
        along the trajectory. Nothing here touches the singular ODE, so
        the returned pairs can be fed to an extended residual as an
        independent consistency check.
        """
        xs, U = self.extended_samples()
        Uprime = np.empty_like(U)
        for i in range(U.shape[0]):
            rho, v, theta, z1, z2 = (float(c) for c in U[i])
            u = v - self.sigma
            _, p_rho, p_theta = pressure(self.gas, rho, theta)
            _, e_theta = internal_energy(self.gas, theta)
            p, _, _ = pressure(self.gas, rho, theta)
            nu, nu_p = self.gas.nu_law(rho)
            k, k_p = self.gas.k_law(rho)
            rho_x = -rho * z1 / u
            dp = p_rho * rho_x + p_theta * z2
            z1_x = (self.m * z1 + dp) / nu - z1 * nu_p * rho_x / nu
            dnum2 = (
                self.m * (e_theta * z2 + v * z1)
                + z1 * p + v * dp
                - (nu_p * rho_x * v * z1 + nu * z1 * z1 + nu * v * z1_x)
            )
            z2_x = dnum2 / k - z2 * k_p * rho_x / k
            Uprime[i] = (rho_x, z1, z2, z1_x, z2_x)
        return xs, U, Uprime


def gilbarg_oracle(
    gas: GasModel,
    pair: RHPair,
    tol: float = 1e-10,
    end_tol: float = 1e-6,
    eps_rel: float = 1e-7,
    x_max: float | None = None,
    max_steps: int = 500_000,
    retries: int = 2,
) -> OracleTrajectory:
    """Shock profile from the once-integrated conservation laws.

    nu v' = m v + p - Pi and k theta' = m (e + v^2/2) + v p - nu v v' - E
    with the three constants fixed by the left state. This route never
    touches the symmetrized matrices, so it can serve as an independent
    check on the singular-ODE profile.
    """
    U_m = pair.left
    sigma = pair.sigma
    m = U_m.rho * (U_m.v - sigma)
    if m == 0.0:
        raise DomainError("mass flux vanishes, the flux-form system is undefined")
    p_m, _, _ = pressure(gas, U_m.rho, U_m.theta)
    e_m, _ = internal_energy(gas, U_m.theta)
    Pi = m * U_m.v + p_m
    Eflux = m * (e_m + 0.5 * U_m.v ** 2) + U_m.v * p_m

    def rhs2(V: np.ndarray) -> np.ndarray:
        v, theta = float(V[0]), float(V[1])
        u = v - sigma
        rho = m / u
        if rho <= 0.0 or theta <= 0.0:
            raise DomainError("flux-form state left the physical region")
        p, _, _ = pressure(gas, rho, theta)
        e, _ = internal_energy(gas, theta)
        nu, _ = gas.nu_law(rho)
        k, _ = gas.k_law(rho)
        v_x = (m * v + p - Pi) / nu
        th_x = (m * (e + 0.5 * v * v) + v * p - nu * v * v_x - Eflux) / k
        return np.array([v_x, th_x])

    ode2 = SingularODE(dim=2, F_eval=rhs2, zeta_eval=lambda V: 1.0, label="flux form")
    left = np.array([U_m.v, U_m.theta])
    right = np.array([pair.right.v, pair.right.theta])

    if pair.strength == 0.0:
        traj = _constant_trajectory(left, 1.0)
        return OracleTrajectory(gas=gas, sigma=sigma, m=m, Pi=Pi, Eflux=Eflux, trajectory=traj)

    plan = _connection_plan(ode2, left, right)
    s_meas = max(_sup(right - left), 1e-12)
    base_eps = eps_rel * s_meas
    rate_floor = min(abs(r) for r in plan.rates_start + plan.rates_target)
    L = x_max if x_max is not None else min(400.0 / rate_floor, 1e6)
    R_div = max(10.0 * s_meas, 0.5)
    capture = 0.5 * end_tol

    def stop(x, V):
        d = _sup(V - plan.target)
        return d <= capture or (d > R_div and _sup(V - plan.start) > R_div)

    attempts = []
    for attempt in range(retries + 1):
        eps = base_eps / (16.0 ** attempt)
        for sgn in (1.0, -1.0):
            traj = integrate_direct(
                ode2, plan.start + sgn * eps * plan.xi, (0.0, plan.direction * L), tol=tol,
                max_steps=max_steps, stop_when=stop,
            )
            mismatch = _sup(traj.final_V - plan.target)
            attempts.append((sgn, eps, traj.termination, mismatch))
            if mismatch <= end_tol and traj.termination in (
                TERM_STOPPED, TERM_EQUILIBRIUM, TERM_REACHED_END,
            ):
                return OracleTrajectory(gas=gas, sigma=sigma, m=m, Pi=Pi, Eflux=Eflux, trajectory=traj)
    raise NoConnectionError(
        "flux-form shooting found no connection; attempts: "
        + ", ".join(f"({s:+g}, {e:.1e}, {t}, {d:.2e})" for s, e, t, d in attempts)
    )


def _profile_table(obj) -> dict[str, np.ndarray]:
    if isinstance(obj, OracleTrajectory):
        return obj.table()
    if isinstance(obj, Profile):
        traj = obj.trajectory
        return {
            "x": traj.xs.copy(),
            "rho": traj.Vs[:, 0].copy(),
            "v": traj.Vs[:, 1].copy(),
            "theta": traj.Vs[:, 2].copy(),
            "z1": traj.Vs[:, 3].copy(),
            "z2": traj.Vs[:, 4].copy(),
        }
    if isinstance(obj, dict):
        return {k: np.asarray(v, dtype=float) for k, v in obj.items()}
    raise TypeError(f"cannot tabulate {type(obj).__name__}")


@dataclass(frozen=True)
class CompareReport:
    """Sup deviation of profile components after reparametrization."""

    sup: float
    per_column: dict
    overlap: tuple[float, float]
    n_points: int


def compare_profiles(a, b, matching: str = "v") -> CompareReport:
    """Reparametrize two profiles by a shared monotone component.

    Both profiles are interpolated (shape-preserving cubic) as functions
    of the matching component on the overlap of their ranges, and the sup
    deviation of the remaining state components is returned. x never
    participates: profiles are translation invariant.
    """
    from scipy.interpolate import PchipInterpolator

    ta, tb = _profile_table(a), _profile_table(b)
    for t in (ta, tb):
        if matching not in t:
            raise DomainError(f"matching column {matching!r} missing")
    columns = [c for c in ("rho", "theta", "z1", "z2", "v") if c != matching and c in ta and c in tb]

    def prepared(t):
        mvals = t[matching]
        d = np.diff(mvals)
        if len(mvals) < 2 or not (np.all(d > 0) or np.all(d < 0)):
            raise NonMonotoneError(f"matching column {matching!r} is not strictly monotone")
        order = np.argsort(mvals)
        return mvals[order], {c: t[c][order] for c in columns}

    ma, cols_a = prepared(ta)
    mb, cols_b = prepared(tb)
    lo = max(ma[0], mb[0])
    hi = min(ma[-1], mb[-1])
    if not (lo < hi):
        raise DomainError("profiles do not overlap in the matching component")
    grid = np.unique(np.concatenate([
        ma[(ma >= lo) & (ma <= hi)], mb[(mb >= lo) & (mb <= hi)], np.array([lo, hi]),
    ]))
    per_column = {}
    worst = 0.0
    for c in columns:
        fa = PchipInterpolator(ma, cols_a[c])
        fb = PchipInterpolator(mb, cols_b[c])
        dev = float(np.max(np.abs(fa(grid) - fb(grid))))
        per_column[c] = dev
        worst = max(worst, dev)
    return CompareReport(sup=worst, per_column=per_column, overlap=(float(lo), float(hi)), n_points=len(grid))


def _shift_trajectory(traj: Trajectory, dt: float, dx: float) -> Trajectory:
    """Translate a trajectory in its independent variable and in x."""
    from dataclasses import replace as dc_replace

    from .sode import _DenseStep

    dense = [
        _DenseStep(
            t0=st.t0 + dt,
            h=st.h,
            y0=(np.concatenate([st.y0[:-1], [st.y0[-1] + dx]]) if traj.mode == "rescaled" else st.y0),
            Q=st.Q,
        )
        for st in traj.dense
    ]
    return Trajectory(
        mode=traj.mode,
        ts=traj.ts + dt,
        Vs=traj.Vs,
        xs=traj.xs + dx,
        taus=None if traj.taus is None else traj.taus + dt,
        termination=traj.termination,
        stats=traj.stats,
        dense=dense,
    )


def boundary_layer(
    gas: GasModel,
    limit_state: State,
    direction_index: int = 0,
    amplitude: float = 1e-3,
    opts: LayerOpts = LayerOpts(),
) -> Profile:
    """Steady layer converging to limit_state at the far end.

    The steady singular ODE is linearized at the equilibrium
    (limit_state, z = 0); spatial decay rates are the non-center
    eigenvalues divided by zeta = v at the equilibrium. The layer is
    produced by integrating backward (from the far end toward x = 0)
    starting a perturbation of the given signed amplitude along the
    decaying direction selected by index (sorted most stable first).

    If the backward sweep approaches the sonic set v = 0, the run is
    redone with the rescaled integrator, which can pass near the set;
    any zeta sign change is reported in the diagnostics. For a
    characteristic limit state (v = 0 within the guard) classification
    falls back to the desingularized rates and only the rescaled sweep
    is used; the tool makes no existence claim in that case.
    """
    ode = steady_singular_ode(gas)
    U_star = np.array([limit_state.rho, limit_state.v, limit_state.theta, 0.0, 0.0])
    if amplitude == 0.0:
        traj = _constant_trajectory(U_star, abs(limit_state.v))
        return Profile(
            kind="boundary_layer", sigma=0.0,
            left=ExtendedState.from_array(U_star), right=ExtendedState.from_array(U_star),
            trajectory=traj,
            diagnostics={"amplitude": 0.0, "note": "zero amplitude, constant layer",
                         "extended_residual_max": 0.0, "flux_drift": 0.0},
        )

    zeta_star = ode.zeta_eval(U_star)
    characteristic = abs(zeta_star) <= SINGULARITY_GUARD
    report = linearize(ode, U_star)
    lam = report.eigenvalues
    if characteristic:
        rates = lam  # desingularized rates, spatial rates undefined at v = 0
    else:
        rates = lam / zeta_star
    noncenter = [i for i in range(len(lam)) if i not in report.center]
    stable = sorted(
        (i for i in noncenter if rates[i].real < 0.0),
        key=lambda i: rates[i].real,
    )
    if not stable:
        raise NoDecayingDirectionError(
            f"no decaying direction at limit state (v = {limit_state.v:g}); "
            f"non-center rates: {[complex(rates[i]) for i in noncenter]}"
        )
    if not (0 <= direction_index < len(stable)):
        raise DomainError(
            f"direction_index {direction_index} out of range, {len(stable)} decaying direction(s)"
        )
    sel = stable[direction_index]
    xi = _real_unit_eigenvector(report, sel)
    rate = float(rates[sel].real)

    if opts.length is not None:
        L = opts.length
    elif characteristic:
        L = 10.0
    else:
        L = min(np.log(max(opts.grow_cap, 10 * abs(amplitude)) / abs(amplitude)) / abs(rate) * 1.5, 1e4)
    start = U_star + amplitude * xi
    cap = opts.grow_cap * max(1.0, _sup(U_star))
    if abs(amplitude) >= cap:
        raise DomainError(f"amplitude {amplitude:g} exceeds the growth cap {cap:g}")

    def stop(x, V):
        return _sup(V - U_star) > cap

    diagnostics: dict = {
        "amplitude": amplitude,
        "direction_index": direction_index,
        "rate": rate,
        "characteristic_limit": characteristic,
        "decaying_rates": [float(rates[i].real) for i in stable],
        "length_requested": float(L),
    }

    traj = None
    if not characteristic:
        traj = integrate_direct(
            ode, start, (L, 0.0), tol=opts.tol, max_steps=opts.max_steps, stop_when=stop,
        )
        diagnostics["mode"] = "direct"
        if traj.termination == TERM_SINGULARITY:
            diagnostics["direct_halt_min_abs_zeta"] = traj.stats.min_abs_zeta
            traj = None
    if traj is None:
        # sonic set on the path (or characteristic limit): desingularized sweep
        tau_dir = -1.0 if ode.zeta_eval(start) > 0 else 1.0
        if characteristic and ode.zeta_eval(start) == 0.0:
            tau_dir = -np.sign(rate) or -1.0
        tau_max = opts.tau_max if opts.tau_max is not None else max(
            10.0 * L / max(abs(zeta_star), 0.05), 100.0
        )

        def stop_resc(tau, V, x):
            return x <= 0.0 or _sup(V - U_star) > cap

        traj = integrate_rescaled(
            ode, start, (0.0, tau_dir * tau_max), tol=opts.tol, x0=L,
            max_steps=opts.max_steps, stop_when=stop_resc,
        )
        diagnostics["mode"] = "rescaled"
        diagnostics["zeta_sign_changes"] = traj.stats.zeta_sign_changes

    # re-anchor so the produced window starts at x = 0
    x_lo = float(np.min(traj.xs))
    if traj.mode == "direct":
        traj = _shift_trajectory(traj, -x_lo, -x_lo)
    else:
        traj = _shift_trajectory(traj, 0.0, -x_lo)
    diagnostics["length_produced"] = float(np.max(traj.xs))
    diagnostics["termination"] = traj.termination
    diagnostics["min_abs_zeta"] = traj.stats.min_abs_zeta

    trace = traj.final_V
    prof = Profile(
        kind="boundary_layer", sigma=0.0,
        left=ExtendedState.from_array(trace),
        right=ExtendedState.from_array(U_star),
        trajectory=traj,
        diagnostics=diagnostics,
    )
    ext_res, skipped = max_extended_residual(ode, traj)
    diagnostics["extended_residual_max"] = ext_res
    diagnostics["extended_residual_skipped"] = skipped
    diagnostics["flux_drift"] = flux_constants(gas, prof).drift
    return prof
