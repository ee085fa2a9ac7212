"""Fixed-step integration kernel for the twin-track roll-coupled vehicle.

All functions here operate on flat float64 arrays so the same code runs
either compiled with numba or as plain Python.  Set the environment
variable ``ANTIROLL_NO_NUMBA=1`` before import to force the uncompiled
fallback path (used by the kernel benchmark and as an escape hatch on
platforms without a working numba).

State and parameter offsets come from :mod:`antiroll.plant.layout`.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .layout import (
    HEADING, NSTATE, PATH_S, POS_X, POS_Y, ROLL, ROLL_RATE, VX, VY, W_FL,
    W_FR, W_RL, W_RR, YAW_RATE,
    P_CG_HEIGHT, P_DAMP_ASYM, P_DRAG, P_FRONT_ROLL_SHARE, P_GRAVITY,
    P_H_SPRUNG, P_LF, P_LR, P_MASS, P_MASS_SPRUNG, P_MASS_UNSPRUNG,
    P_ROLL_AXIS_H, P_ROLL_DAMPING, P_ROLL_INERTIA, P_ROLL_RESIST,
    P_ROLL_STIFFNESS, P_STIFF_ASYM, P_TIP_INERTIA, P_TIRE_B, P_TIRE_C,
    P_TIRE_D, P_TIRE_E, P_TIRE_LOAD_SENS, P_TIRE_STIFF, P_TRACK_WIDTH,
    P_WHEEL_INERTIA, P_WHEEL_RADIUS, P_YAW_INERTIA,
)

_DISABLED = os.environ.get("ANTIROLL_NO_NUMBA", "0") == "1"

if not _DISABLED:
    try:
        from numba import njit as _njit
        NUMBA_ACTIVE = True
    except ImportError:        # pragma: no cover - depends on environment
        NUMBA_ACTIVE = False
else:
    NUMBA_ACTIVE = False

if NUMBA_ACTIVE:
    def _jit(fn):
        return _njit(cache=True, fastmath=False)(fn)
else:
    def _jit(fn):
        return fn

# speed below which slip quantities are faded out to keep the model sane
LOW_SPEED = 0.1
# roll angle beyond which the run is declared rolled over
ROLL_LIMIT = 0.5
# lateral slip input is capped so extreme sideslip cannot blow up the curve
TAN_ALPHA_CAP = 3.0

STATUS_OK = 0
STATUS_ROLLED = 1
STATUS_NONFINITE = 2

# aux vector layout produced by the rhs
AUX_FZ_FL = 0
AUX_FZ_FR = 1
AUX_FZ_RL = 2
AUX_FZ_RR = 3
AUX_LTR = 4      # unclamped load-transfer ratio signal
AUX_AY = 5       # lateral specific force from tire forces [m/s^2]
AUX_LIFTED = 6   # 1.0 while the rigid tipping regime is active
AUX_MU = 7       # local surface friction scale
NAUX = 8


@_jit
def _slip_ratio(wheel_speed, ground_speed):
    """Longitudinal slip with braking/traction denominators.

    ``wheel_speed`` is the circumferential speed R_w*omega, ``ground_speed``
    the contact-patch speed along the wheel plane.  Both denominators are
    guarded and the result is faded below LOW_SPEED.
    """
    ref = ground_speed if ground_speed > wheel_speed else wheel_speed
    if ref < 1e-9:
        return 0.0
    if wheel_speed < ground_speed:
        denom = ground_speed if ground_speed > LOW_SPEED else LOW_SPEED
    else:
        denom = wheel_speed if wheel_speed > LOW_SPEED else LOW_SPEED
    lam = (wheel_speed - ground_speed) / denom
    if ref < LOW_SPEED:
        lam *= ref / LOW_SPEED
    if lam > 1.0:
        lam = 1.0
    elif lam < -1.0:
        lam = -1.0
    return lam


@_jit
def _tire_curve(s_c, shape, curvature):
    """Normalized force magnitude response, bounded to (-1, 1)."""
    x = (s_c / shape) * (1.0 - curvature) + curvature * math.atan(s_c / shape)
    return math.sin(shape * math.atan(x))


@_jit
def _tire_force(lam, tan_alpha, fz, weight, b, c, d, e, c2, c1, mu_scale):
    """Combined-slip force in the wheel frame.

    Returns (fx, fy).  ``weight`` is the total vehicle weight m*g used for
    load normalization; ``mu_scale`` scales the surface friction relative
    to the nominal curve.
    """
    if fz <= 1e-6:
        return 0.0, 0.0
    if tan_alpha > TAN_ALPHA_CAP:
        tan_alpha = TAN_ALPHA_CAP
    elif tan_alpha < -TAN_ALPHA_CAP:
        tan_alpha = -TAN_ALPHA_CAP
    s_norm = math.sqrt(lam * lam + tan_alpha * tan_alpha)
    if s_norm < 1e-12:
        return 0.0, 0.0
    d_eff = d * mu_scale
    load = fz / weight
    stiff = c1 * mu_scale * weight * (1.0 - math.exp(-c2 * load))
    ratio = 0.9 * load
    peak = fz * 1.0114 * d_eff / (1.0 + ratio * ratio * ratio)
    if peak < 1e-9:
        return 0.0, 0.0
    s_c = stiff * s_norm / peak
    force = peak * _tire_curve(s_c, c, e)
    return force * lam / s_norm, force * tan_alpha / s_norm


@_jit
def _terrain_lookup(s, s_step, table):
    n = table.shape[0]
    pos = s / s_step
    if pos <= 0.0:
        return table[0]
    idx = int(pos)
    if idx >= n - 1:
        return table[n - 1]
    frac = pos - idx
    return table[idx] * (1.0 - frac) + table[idx + 1] * frac


@_jit
def _rhs(x, par, delta, torques, terr_step, terr_zpp, terr_bank, terr_mu,
         deriv, aux):
    """Continuous-time derivative.  Fills ``deriv`` and ``aux`` in place."""
    vx = x[VX]
    vy = x[VY]
    r = x[YAW_RATE]
    phi = x[ROLL]
    p = x[ROLL_RATE]

    m = par[P_MASS]
    ms = par[P_MASS_SPRUNG]
    muc = par[P_MASS_UNSPRUNG]
    hs = par[P_H_SPRUNG]
    ixx = par[P_ROLL_INERTIA]
    izz = par[P_YAW_INERTIA]
    ks = par[P_ROLL_STIFFNESS]
    ds = par[P_ROLL_DAMPING]
    ka = par[P_STIFF_ASYM]
    da = par[P_DAMP_ASYM]
    tw = par[P_TRACK_WIDTH]
    lf = par[P_LF]
    lr = par[P_LR]
    rw = par[P_WHEEL_RADIUS]
    g = par[P_GRAVITY]
    h_ra = par[P_ROLL_AXIS_H]
    iw = par[P_WHEEL_INERTIA]
    f_share = par[P_FRONT_ROLL_SHARE]
    c_drag = par[P_DRAG]
    c_rr = par[P_ROLL_RESIST]
    tb = par[P_TIRE_B]
    tc = par[P_TIRE_C]
    td = par[P_TIRE_D]
    te = par[P_TIRE_E]
    tc2 = par[P_TIRE_LOAD_SENS]
    tc1 = par[P_TIRE_STIFF]
    h_cg = par[P_CG_HEIGHT]
    i_tip = par[P_TIP_INERTIA]

    weight = m * g
    half_tw = 0.5 * tw
    s_here = x[PATH_S]
    zpp = _terrain_lookup(s_here, terr_step, terr_zpp)
    bank = _terrain_lookup(s_here, terr_step, terr_bank)
    mu_scale = _terrain_lookup(s_here, terr_step, terr_mu)

    speed_sq = vx * vx + vy * vy
    g_fac = 1.0 + zpp * speed_sq / g
    if g_fac < 0.3:
        g_fac = 0.3
    elif g_fac > 1.7:
        g_fac = 1.7
    w_total = m * g * g_fac
    sin_bank = math.sin(bank)

    # axle slip angles; the low-speed guard keeps the atan well defined
    u_g = vx if vx > LOW_SPEED else LOW_SPEED
    alpha_f = delta - math.atan((vy + lf * r) / u_g)
    alpha_r = math.atan((-vy + lr * r) / u_g)
    fade = 1.0
    if vx < LOW_SPEED:
        fade = vx / LOW_SPEED if vx > 0.0 else 0.0
    tan_af = math.tan(alpha_f) * fade if abs(alpha_f) < 1.45 else (
        TAN_ALPHA_CAP if alpha_f > 0.0 else -TAN_ALPHA_CAP)
    tan_ar = math.tan(alpha_r) * fade if abs(alpha_r) < 1.45 else (
        TAN_ALPHA_CAP if alpha_r > 0.0 else -TAN_ALPHA_CAP)

    # per-wheel hub speeds (left wheels sit at +tw/2)
    u_l = vx - r * half_tw
    u_r = vx + r * half_tw
    lam_fl = _slip_ratio(rw * x[W_FL], u_l)
    lam_fr = _slip_ratio(rw * x[W_FR], u_r)
    lam_rl = _slip_ratio(rw * x[W_RL], u_l)
    lam_rr = _slip_ratio(rw * x[W_RR], u_r)

    # suspension roll moment transmitted to the axles (reaction to L_T)
    tan_phi = math.tan(phi) if abs(phi) < 1.2 else (
        math.tan(1.2) if phi > 0.0 else -math.tan(1.2))
    m_susp = (ks * (1.0 - ka * ka) * tan_phi
              + ds * (1.0 - da * da) * p * math.cos(phi)
              + weight * (ka + da))

    fz_f0 = w_total * lr / (lf + lr)
    fz_r0 = w_total * lf / (lf + lr)

    # two-pass fixed point: loads need the tire lateral force, the tire
    # force needs the loads.  Pass one seeds with the centripetal estimate.
    a_tr = vx * r - g * sin_bank
    fy_total = 0.0
    fx_total = 0.0
    fz_fl = fz_fr = fz_rl = fz_rr = 0.0
    fx_fl = fx_fr = fx_rl = fx_rr = 0.0
    fy_fl = fy_fr = fy_rl = fy_rr = 0.0
    m_transfer = 0.0
    for _ in range(2):
        m_transfer = m * a_tr * h_ra + m_susp
        df = m_transfer / tw
        df_f = f_share * df
        df_r = (1.0 - f_share) * df
        fz_fl = 0.5 * fz_f0 - df_f
        fz_fr = 0.5 * fz_f0 + df_f
        if fz_fl < 0.0:
            fz_fl = 0.0
            fz_fr = fz_f0
        elif fz_fr < 0.0:
            fz_fr = 0.0
            fz_fl = fz_f0
        fz_rl = 0.5 * fz_r0 - df_r
        fz_rr = 0.5 * fz_r0 + df_r
        if fz_rl < 0.0:
            fz_rl = 0.0
            fz_rr = fz_r0
        elif fz_rr < 0.0:
            fz_rr = 0.0
            fz_rl = fz_r0

        fx_fl, fy_fl = _tire_force(lam_fl, tan_af, fz_fl, weight,
                                   tb, tc, td, te, tc2, tc1, mu_scale)
        fx_fr, fy_fr = _tire_force(lam_fr, tan_af, fz_fr, weight,
                                   tb, tc, td, te, tc2, tc1, mu_scale)
        fx_rl, fy_rl = _tire_force(lam_rl, tan_ar, fz_rl, weight,
                                   tb, tc, td, te, tc2, tc1, mu_scale)
        fx_rr, fy_rr = _tire_force(lam_rr, tan_ar, fz_rr, weight,
                                   tb, tc, td, te, tc2, tc1, mu_scale)

        cos_d = math.cos(delta)
        sin_d = math.sin(delta)
        fx_total = (fx_fl + fx_fr) * cos_d - (fy_fl + fy_fr) * sin_d \
            + fx_rl + fx_rr
        fy_total = (fx_fl + fx_fr) * sin_d + (fy_fl + fy_fr) * cos_d \
            + fy_rl + fy_rr
        a_tr = fy_total / m

    # body-frame wheel forces for the yaw moment
    cos_d = math.cos(delta)
    sin_d = math.sin(delta)
    fxb_fl = fx_fl * cos_d - fy_fl * sin_d
    fyb_fl = fx_fl * sin_d + fy_fl * cos_d
    fxb_fr = fx_fr * cos_d - fy_fr * sin_d
    fyb_fr = fx_fr * sin_d + fy_fr * cos_d
    yaw_m = (lf * (fyb_fl + fyb_fr) - lr * (fy_rl + fy_rr)
             - half_tw * (fxb_fl + fx_rl) + half_tw * (fxb_fr + fx_rr))

    lifted = abs(m_transfer) > 0.5 * w_total * tw
    if lifted:
        # one side airborne: the vehicle pivots rigidly about the loaded
        # contact line, the suspension no longer shapes the motion
        direction = 1.0 if m_transfer > 0.0 else -1.0
        rho = math.sqrt(h_cg * h_cg + half_tw * half_tw)
        theta0 = math.atan2(half_tw, h_cg)
        theta = theta0 - direction * phi
        p_dot = direction * (m * a_tr * direction * rho * math.cos(theta)
                             - m * g * rho * math.sin(theta)
                             - 0.02 * ds * p * direction) / i_tip
    else:
        sin_phi = math.sin(phi)
        cos_phi = math.cos(phi)
        num = hs * ms * (fy_total / m
                         + sin_phi * (g + hs * (muc / m) * p * p)) - m_susp
        den = ixx + hs * hs * ms * (muc / m) * cos_phi
        p_dot = num / den

    cos_phi = math.cos(phi)
    sin_phi = math.sin(phi)
    vy_dot = (fy_total + m * g * sin_bank) / m - vx * r \
        + (ms * hs / m) * (p_dot * cos_phi - p * p * sin_phi)
    drag = c_drag * vx * vx + c_rr * w_total
    vx_dot = (fx_total - drag - ms * hs * p * r * cos_phi) / m + vy * r
    r_dot = yaw_m / izz

    deriv[VX] = vx_dot
    deriv[VY] = vy_dot
    deriv[YAW_RATE] = r_dot
    deriv[ROLL] = p
    deriv[ROLL_RATE] = p_dot
    deriv[W_FL] = (torques[0] - rw * fx_fl) / iw
    deriv[W_FR] = (torques[1] - rw * fx_fr) / iw
    deriv[W_RL] = (torques[2] - rw * fx_rl) / iw
    deriv[W_RR] = (torques[3] - rw * fx_rr) / iw
    cos_h = math.cos(x[HEADING])
    sin_h = math.sin(x[HEADING])
    deriv[POS_X] = vx * cos_h - vy * sin_h
    deriv[POS_Y] = vx * sin_h + vy * cos_h
    deriv[HEADING] = r
    deriv[PATH_S] = math.sqrt(speed_sq)

    aux[AUX_FZ_FL] = fz_fl
    aux[AUX_FZ_FR] = fz_fr
    aux[AUX_FZ_RL] = fz_rl
    aux[AUX_FZ_RR] = fz_rr
    aux[AUX_LTR] = 2.0 * (m_transfer / tw) / weight
    aux[AUX_AY] = a_tr
    aux[AUX_LIFTED] = 1.0 if lifted else 0.0
    aux[AUX_MU] = mu_scale
    return 0


@_jit
def integrate(x, par, delta, torques, terr_step, terr_zpp, terr_bank,
              terr_mu, dt, n_sub, aux):
    """Advance ``x`` in place by ``n_sub`` RK4 steps of size ``dt``.

    Inputs are held constant across the window (zero-order hold).  Returns
    STATUS_OK, STATUS_ROLLED, or STATUS_NONFINITE; ``aux`` reflects the
    last evaluated state.
    """
    k1 = np.empty(NSTATE)
    k2 = np.empty(NSTATE)
    k3 = np.empty(NSTATE)
    k4 = np.empty(NSTATE)
    tmp = np.empty(NSTATE)
    for _ in range(n_sub):
        _rhs(x, par, delta, torques, terr_step, terr_zpp, terr_bank,
             terr_mu, k1, aux)
        for i in range(NSTATE):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        _rhs(tmp, par, delta, torques, terr_step, terr_zpp, terr_bank,
             terr_mu, k2, aux)
        for i in range(NSTATE):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        _rhs(tmp, par, delta, torques, terr_step, terr_zpp, terr_bank,
             terr_mu, k3, aux)
        for i in range(NSTATE):
            tmp[i] = x[i] + dt * k3[i]
        _rhs(tmp, par, delta, torques, terr_step, terr_zpp, terr_bank,
             terr_mu, k4, aux)
        for i in range(NSTATE):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        ok = True
        for i in range(NSTATE):
            if not math.isfinite(x[i]):
                ok = False
        if not ok:
            return STATUS_NONFINITE
        if abs(x[ROLL]) > ROLL_LIMIT:
            _rhs(x, par, delta, torques, terr_step, terr_zpp, terr_bank,
                 terr_mu, k1, aux)
            return STATUS_ROLLED
    # refresh aux at the final state for logging
    _rhs(x, par, delta, torques, terr_step, terr_zpp, terr_bank,
         terr_mu, k1, aux)
    return STATUS_OK
