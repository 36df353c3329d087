"""Data-generating processes and Monte Carlo drivers.

Factor processes: i.i.d. standard matrix normal (``matrix_normal``) or a
diagonal MAR(1) recursion (``mar1``).  Noise: i.i.d. standard matrix normal
(``iid``), diagonal MAR(1) (``mar1``), or matrix normal with equicorrelated
row and column covariances (``row_col_corr``).  The target is
``y_{t+h} = a' F_t b + e_{t+h}`` with ``e ~ N(0, 1)``.

Every replication draws from its own generator keyed by
``(seed, cell, rep_index)``, so results do not depend on worker count or
execution order.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import partial
from typing import Iterable, NamedTuple

import numpy as np
from scipy.stats import norm

from . import alpha_pca, bilinear_lse, evaluate
from .core_types import FactorKind, MatrixSeries, NoiseKind, ScalarSeries, SimTruth, ValidationError
from .linalg import kron
from .screening import screen

BURN_IN = 200

COMBOS = tuple(
    (fk, nk)
    for fk in (FactorKind.MATRIX_NORMAL, FactorKind.MAR1)
    for nk in (NoiseKind.IID, NoiseKind.MAR1, NoiseKind.ROW_COL_CORR)
)
SIZES = ((5, 10), (10, 10), (20, 20))
TABLE1_T_RULES = (0.5, 1.0, 2.0)
TABLE2_T = (100, 200, 400, 5000)
TABLE3_ALPHAS = tuple(round(-1 + 0.1 * i, 1) for i in range(21))


@dataclass(frozen=True)
class SimConfig:
    p: int = 10
    q: int = 10
    k: int = 3
    r: int = 2
    T: int = 100
    horizon: int = 1
    factor_kind: FactorKind = FactorKind.MATRIX_NORMAL
    noise_kind: NoiseKind = NoiseKind.IID
    alpha_weight: float = 0.0
    replications: int = 200
    seed: int = 0
    noise_scale: float = 1.0
    normalize_loadings: bool = True
    burn_in: int = BURN_IN

    def __post_init__(self):
        object.__setattr__(self, "factor_kind", FactorKind(self.factor_kind))
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))
        if min(self.p, self.q, self.k, self.r, self.T, self.horizon) < 1:
            raise ValidationError("dimensions and horizon must be positive")
        if self.k > self.p or self.r > self.q:
            raise ValidationError("factor dimensions exceed the panel")
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if self.alpha_weight < -1:
            raise ValidationError("alpha_weight must be >= -1")

    def cell_key(self) -> int:
        tag = f"{self.factor_kind.value}|{self.noise_kind.value}|{self.p}|{self.q}|{self.k}|{self.r}|{self.T}|{self.horizon}"
        return zlib.crc32(tag.encode())


def rng_for(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def normalize_loading(L: np.ndarray) -> np.ndarray:
    """Rescale so that ``L'L / n = I`` while staying closest to ``L``."""
    n = L.shape[0]
    w, v = np.linalg.eigh(L.T @ L / n)
    return L @ (v / np.sqrt(w)) @ v.T


def _mar1(rng, coef: np.ndarray, T: int, burn_in: int, shape) -> np.ndarray:
    """``Z_t = coef * Z_{t-1} + N(0, 1)`` elementwise, from ``Z_0 = 0``."""
    out = np.empty((T,) + shape)
    z = np.zeros(shape)
    for t in range(burn_in + T):
        z = coef * z + rng.standard_normal(shape)
        if t >= burn_in:
            out[t - burn_in] = z
    return out


class Structure(NamedTuple):
    R: np.ndarray
    C: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    alpha_vec: np.ndarray
    beta_vec: np.ndarray


def draw_structure(cfg: SimConfig, rng: np.random.Generator) -> Structure:
    p, q, k, r = cfg.p, cfg.q, cfg.k, cfg.r
    R = rng.uniform(-1, 1, (p, k))
    C = rng.uniform(-1, 1, (q, r))
    if cfg.normalize_loadings:
        R, C = normalize_loading(R), normalize_loading(C)
    if cfg.factor_kind is FactorKind.MAR1:
        phi1, phi2 = np.diag(rng.uniform(-1, 1, k)), np.diag(rng.uniform(-1, 1, r))
    else:
        phi1, phi2 = np.zeros((k, k)), np.zeros((r, r))
    if cfg.noise_kind is NoiseKind.MAR1:
        psi1, psi2 = np.diag(rng.uniform(-1, 1, p)), np.diag(rng.uniform(-1, 1, q))
    else:
        psi1, psi2 = np.zeros((p, p)), np.zeros((q, q))
    a = rng.standard_normal(k)
    a /= np.linalg.norm(a)
    b = rng.standard_normal(r)
    return Structure(R, C, phi1, phi2, psi1, psi2, a, b)


def row_col_covariances(p: int, q: int):
    U = np.full((p, p), 1.0 / p) + (1 - 1.0 / p) * np.eye(p)
    V = np.full((q, q), 1.0 / q) + (1 - 1.0 / q) * np.eye(q)
    return U, V


def draw_noise(cfg: SimConfig, st: Structure, rng: np.random.Generator, T: int) -> np.ndarray:
    p, q = cfg.p, cfg.q
    if cfg.noise_kind is NoiseKind.IID:
        E = rng.standard_normal((T, p, q))
    elif cfg.noise_kind is NoiseKind.MAR1:
        coef = np.outer(np.diag(st.psi1), np.diag(st.psi2))
        E = _mar1(rng, coef, T, cfg.burn_in, (p, q))
    else:
        U, V = row_col_covariances(p, q)
        LU, LV = np.linalg.cholesky(U), np.linalg.cholesky(V)
        E = LU @ rng.standard_normal((T, p, q)) @ LV.T
    return cfg.noise_scale * E


def gen_replication(cfg: SimConfig, rep_index: int, structure: Structure | None = None):
    """One draw of ``(truth, X, y)``.

    The stream depends only on ``(cfg.seed, cfg.cell_key(), rep_index)``.
    ``structure`` fixes the loadings and coefficient matrices (used by the
    normality study); otherwise they are drawn per replication.
    """
    rng = rng_for(cfg.seed, cfg.cell_key(), rep_index)
    st = draw_structure(cfg, rng) if structure is None else structure
    k, r, T, h = cfg.k, cfg.r, cfg.T, cfg.horizon
    n = T + h
    if cfg.factor_kind is FactorKind.MAR1:
        coef = np.outer(np.diag(st.phi1), np.diag(st.phi2))
        F_full = _mar1(rng, coef, n, cfg.burn_in, (k, r))
    else:
        F_full = rng.standard_normal((n, k, r))
    F = F_full[h:]
    E = draw_noise(cfg, st, rng, T)
    X = np.einsum("ik,tkl,jl->tij", st.R, F, st.C) + E
    e = rng.standard_normal(T)
    # y[t] = a' F_{t-h} b + e[t]; F_full[t] is F_{t-h}
    y = np.einsum("k,tkl,l->t", st.alpha_vec, F_full[:T], st.beta_vec) + e
    truth = SimTruth(
        st.R, st.C, F, st.alpha_vec, st.beta_vec, cfg.noise_kind, cfg.factor_kind,
        st.phi1, st.phi2, st.psi1, st.psi2, 1.0, h, int(cfg.seed),
    )
    return truth, MatrixSeries(X), ScalarSeries(y)


# --- per-replication metrics --------------------------------------------------------


class RepLoss(NamedTuple):
    factor_loss: float
    kron_loss: float
    degenerate: bool


def replication_losses(cfg: SimConfig, rep_index: int) -> RepLoss:
    truth, X, y = gen_replication(cfg, rep_index)
    est = alpha_pca.fit(X, cfg.k, cfg.r, cfg.alpha_weight)
    rot = evaluate.rotations(truth, est)
    fl = float(np.mean(evaluate.factor_loss(truth, est, rot)))
    load = bilinear_lse.fit(est.F_hat, y, cfg.horizon)
    kl = evaluate.kron_loss(truth, est, load, rot)
    return RepLoss(fl, kl, rot.degenerate)


def _map(fn, items, n_jobs: int):
    items = list(items)
    if n_jobs is None or n_jobs <= 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * n_jobs))))


def run_cell(cfg: SimConfig, n_jobs: int = 1):
    return _map(partial(replication_losses, cfg), range(cfg.replications), n_jobs)


def _summary(values) -> tuple:
    v = np.sort(np.asarray(values, dtype=float))
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


def table1_grid(combos=COMBOS, sizes=SIZES, t_rules=TABLE1_T_RULES, **kw) -> list:
    return [
        SimConfig(p=p, q=q, T=int(round(rule * p * q)), factor_kind=fk, noise_kind=nk, **kw)
        for fk, nk in combos for (p, q) in sizes for rule in t_rules
    ]


def table2_grid(combos=COMBOS, sizes=SIZES, horizons_T=TABLE2_T, **kw) -> list:
    return [
        SimConfig(p=p, q=q, T=T, factor_kind=fk, noise_kind=nk, **kw)
        for fk, nk in combos for (p, q) in sizes for T in horizons_T
    ]


def _cell_row(cfg: SimConfig, metric: str, values, n_degenerate: int) -> dict:
    mean, sd = _summary(values)
    return {
        "factor_kind": cfg.factor_kind.value, "noise_kind": cfg.noise_kind.value,
        "p": cfg.p, "q": cfg.q, "k": cfg.k, "r": cfg.r, "T": cfg.T, "alpha": cfg.alpha_weight,
        "metric": metric, "mean": mean, "sd": sd, "n_reps": len(values),
        "n_degenerate": n_degenerate, "seed": cfg.seed,
    }


def run_table1(grid: Iterable[SimConfig] | None = None, n_jobs: int = 1) -> list:
    """Mean and sd of the time-averaged factor loss for each cell."""
    rows = []
    for cfg in grid if grid is not None else table1_grid():
        res = run_cell(cfg, n_jobs)
        rows.append(_cell_row(cfg, "factor_loss", [x.factor_loss for x in res], sum(x.degenerate for x in res)))
    return rows


def run_table2(grid: Iterable[SimConfig] | None = None, n_jobs: int = 1) -> list:
    """Mean and sd of the Kronecker log loss for each cell."""
    rows = []
    for cfg in grid if grid is not None else table2_grid():
        res = run_cell(cfg, n_jobs)
        rows.append(_cell_row(cfg, "kron_log_loss", [x.kron_loss for x in res], sum(x.degenerate for x in res)))
    return rows


# --- screening study ------------------------------------------------------------------


@dataclass(frozen=True)
class ScreenStudyConfig:
    p_signal: int = 10
    q_signal: int = 10
    extra_rows: int = 5
    extra_cols: int = 5
    k: int = 3
    r: int = 2
    T: int = 1000
    horizon: int = 1
    factor_kind: FactorKind = FactorKind.MAR1
    noise_kind: NoiseKind = NoiseKind.IID
    alphas: tuple = TABLE3_ALPHAS
    threshold: float = 0.06
    train_fraction: float = 0.8
    replications: int = 200
    seed: int = 0
    normalize_loadings: bool = True

    def sim_config(self) -> SimConfig:
        return SimConfig(
            p=self.p_signal, q=self.q_signal, k=self.k, r=self.r, T=self.T, horizon=self.horizon,
            factor_kind=self.factor_kind, noise_kind=self.noise_kind, replications=self.replications,
            seed=self.seed, normalize_loadings=self.normalize_loadings,
        )


def pad_with_noise(X: np.ndarray, extra_rows: int, extra_cols: int, rng) -> np.ndarray:
    T, p, q = X.shape
    out = rng.standard_normal((T, p + extra_rows, q + extra_cols))
    out[:, :p, :q] = X
    return out


def _holdout_msfe(X, y, n_train, h, k, r, alpha_weight) -> float:
    k = min(k, X.shape[1])
    r = min(r, X.shape[2])
    est = alpha_pca.fit(X[:n_train], k, r, alpha_weight)
    load = bilinear_lse.fit(est.F_hat, y[:n_train], h)
    t = np.arange(n_train - h, X.shape[0] - h)
    pred = bilinear_lse.forecast(est.project(X[t]), load)
    return evaluate.msfe(pred, y[t + h])


class ScreenRep(NamedTuple):
    noisy: np.ndarray
    refined: np.ndarray
    kept_rows: tuple
    kept_cols: tuple
    screen_failed: bool


def screening_replication(cfg: ScreenStudyConfig, rep_index: int) -> ScreenRep:
    sim = cfg.sim_config()
    _, Xs, ys = gen_replication(sim, rep_index)
    X = pad_with_noise(Xs.values, cfg.extra_rows, cfg.extra_cols, rng_for(cfg.seed, sim.cell_key(), rep_index, 1))
    y = ys.values
    n_train = int(round(cfg.train_fraction * cfg.T))
    failed = False
    try:
        res = screen(X[:n_train], y[:n_train], cfg.threshold, cfg.threshold)
        rows, cols = res.kept_rows, res.kept_cols
    except ValidationError:
        failed = True
        rows, cols = tuple(range(X.shape[1])), tuple(range(X.shape[2]))
    Xr = X[:, list(rows)][:, :, list(cols)]
    noisy = np.array([_holdout_msfe(X, y, n_train, cfg.horizon, cfg.k, cfg.r, a) for a in cfg.alphas])
    refined = np.array([_holdout_msfe(Xr, y, n_train, cfg.horizon, cfg.k, cfg.r, a) for a in cfg.alphas])
    return ScreenRep(noisy, refined, rows, cols, failed)


def run_table3(cfg: ScreenStudyConfig | None = None, n_jobs: int = 1):
    """MSFE with the noise-padded panel vs the screened panel, per alpha.

    Returns ``(rows, reps)``: one summary row per alpha and the raw
    per-replication results.
    """
    cfg = cfg or ScreenStudyConfig()
    reps = _map(partial(screening_replication, cfg), range(cfg.replications), n_jobs)
    noisy = np.array([x.noisy for x in reps])
    refined = np.array([x.refined for x in reps])
    p_sig, q_sig = cfg.p_signal, cfg.q_signal
    exact = sum(
        1 for x in reps if not x.screen_failed
        and x.kept_rows == tuple(range(p_sig)) and x.kept_cols == tuple(range(q_sig))
    )
    rows = []
    for i, a in enumerate(cfg.alphas):
        mn, mr = float(noisy[:, i].mean()), float(refined[:, i].mean())
        rows.append({
            "alpha": a, "msfe_noisy": mn, "msfe_refined": mr,
            "reduction_pct": 100.0 * (mn - mr) / mn,
            "sd_noisy": float(noisy[:, i].std(ddof=1)) if len(reps) > 1 else 0.0,
            "sd_refined": float(refined[:, i].std(ddof=1)) if len(reps) > 1 else 0.0,
            "n_reps": len(reps), "n_screen_failed": sum(x.screen_failed for x in reps),
            "n_exact_recovery": exact, "threshold": cfg.threshold, "seed": cfg.seed,
        })
    return rows, reps


# --- normality study -----------------------------------------------------------------


ESTIMANDS = ("alpha_1", "beta_1", "kron_1")


@dataclass(frozen=True)
class NormalityResult:
    raw: dict  # (estimand, alpha) -> sqrt(T)-scaled deviations from rotated truth
    standardized: dict
    degenerate: dict

    def qq(self, estimand: str, alpha_weight: float):
        z = np.sort(self.standardized[(estimand, alpha_weight)])
        n = z.size
        theo = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        return theo, z

    def qq_correlation(self, estimand: str, alpha_weight: float) -> float:
        if self.degenerate[(estimand, alpha_weight)]:
            return float("nan")
        theo, z = self.qq(estimand, alpha_weight)
        return float(np.corrcoef(theo, z)[0, 1])

    @property
    def columns(self) -> list:
        return list(self.standardized)


def _rotated_target(truth: SimTruth, rot: evaluate.RotationPair, a_hat: np.ndarray):
    a = rot.H_R.T @ truth.alpha_vec
    b = rot.H_C.T @ truth.beta_vec
    s = np.linalg.norm(a)
    if np.dot(a, a_hat) < 0:
        s = -s
    return a / s, b * s


def normality_replication(cfg: SimConfig, structure: Structure, alphas, rep_index: int,
                          zero_target_noise: bool = False) -> dict:
    truth, X, y = gen_replication(cfg, rep_index, structure)
    if zero_target_noise:
        y = ScalarSeries(np.einsum("k,tkl,l->t", truth.alpha_vec, _pre_factors(truth, cfg, rep_index), truth.beta_vec))
    out = {}
    rootT = math.sqrt(cfg.T)
    for a_w in alphas:
        est = alpha_pca.fit(X, cfg.k, cfg.r, a_w)
        rot = evaluate.rotations(truth, est)
        load = bilinear_lse.fit(est.F_hat, y, cfg.horizon)
        a_t, b_t = _rotated_target(truth, rot, load.alpha_vec)
        out[("alpha_1", a_w)] = rootT * (load.alpha_vec[0] - a_t[0])
        out[("beta_1", a_w)] = rootT * (load.beta_vec[0] - b_t[0])
        out[("kron_1", a_w)] = rootT * (kron(load.beta_vec, load.alpha_vec)[0] - kron(b_t, a_t)[0])
    return out


def _pre_factors(truth, cfg, rep_index):
    # factors that drive y[t]: F_{t-h}; regenerate the same stream
    rng = rng_for(cfg.seed, cfg.cell_key(), rep_index)
    n = cfg.T + cfg.horizon
    if cfg.factor_kind is FactorKind.MAR1:
        coef = np.outer(np.diag(truth.phi1), np.diag(truth.phi2))
        return _mar1(rng, coef, n, cfg.burn_in, (cfg.k, cfg.r))[: cfg.T]
    return rng.standard_normal((n, cfg.k, cfg.r))[: cfg.T]


def run_normality(cfg: SimConfig | None = None, replications: int = 1000, alphas=(-1.0, 0.0, 1.0),
                  n_jobs: int = 1, zero_target_noise: bool = False) -> NormalityResult:
    """Sampling distribution of the first coordinates of the loading estimates.

    Loadings, ``a`` and ``b`` are drawn once from the master seed and held
    fixed; factors, noise and target innovations are redrawn in every
    replication.  Each sample is ``sqrt(T)`` times the deviation from the
    rotated truth ``(H_R' a, H_C' b)`` (rescaled to unit-norm ``H_R' a``
    with its sign aligned to the estimate), then standardized by the sample
    mean and standard deviation.
    """
    cfg = cfg or SimConfig(p=10, q=10, k=3, r=2, T=400)
    cfg = replace(cfg, replications=replications)
    structure = draw_structure(cfg, rng_for(cfg.seed, cfg.cell_key(), 2**32 - 1))
    fn = partial(normality_replication, cfg, structure, tuple(alphas), zero_target_noise=zero_target_noise)
    reps = _map(fn, range(replications), n_jobs)
    raw, std, degen = {}, {}, {}
    for name in ESTIMANDS:
        for a_w in alphas:
            v = np.array([rep[(name, a_w)] for rep in reps])
            sd = v.std(ddof=1) if v.size > 1 else 0.0
            flat = not sd > 1e-12 * max(1.0, np.max(np.abs(v)))
            raw[(name, a_w)] = v
            std[(name, a_w)] = np.zeros_like(v) if flat else (v - v.mean()) / sd
            degen[(name, a_w)] = bool(flat)
    return NormalityResult(raw, std, degen)


def config_dict(cfg) -> dict:
    d = asdict(cfg)
    return {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}


# --- planted-factor panel for end-to-end checks ---------------------------------------


class PlantedFixture(NamedTuple):
    X: np.ndarray  # T x p x q
    y: np.ndarray  # y[t] depends on the factors at t - 1
    row_ids: tuple
    col_ids: tuple
    signal_rows: tuple
    signal_cols: tuple
    R: np.ndarray
    C: np.ndarray
    alpha_vec: np.ndarray
    beta_vec: np.ndarray


def planted_fixture(seed: int = 0, T: int = 107, p: int = 14, q: int = 10, k: int = 3, r: int = 2,
                    p_signal: int = 10, q_signal: int = 7, phi: float = 0.7, signal_noise: float = 0.5,
                    distractor_noise: float = 3.0, target_noise: float = 0.5, beta_norm: float = 2.0
                    ) -> PlantedFixture:
    """A ``T x p x q`` panel whose leading ``p_signal x q_signal`` block carries
    a ``(k, r)`` MAR(1) factor structure; the remaining rows and columns are
    high-variance noise unrelated to the target.

    Every signal row has the same absolute projection on ``a`` and every signal
    column on ``b``, so every signal entry correlates equally with
    ``y_{t+1} = a' F_t b + e_{t+1}``.  Correlation screening at 0.2 recovers
    the signal block on the default seed.
    """
    if not (p_signal <= p and q_signal <= q and k <= p_signal and r <= q_signal):
        raise ValidationError("signal block must fit in the panel and hold the factors")
    rng = rng_for(seed, 0x5EED)
    a = rng.standard_normal(k)
    a /= np.linalg.norm(a)
    b = rng.standard_normal(r)
    b /= np.linalg.norm(b)
    R = np.zeros((p, k))
    C = np.zeros((q, r))
    R[:p_signal] = rng.uniform(-1, 1, (p_signal, k)) @ (np.eye(k) - np.outer(a, a)) \
        + np.outer(rng.choice([-1.0, 1.0], p_signal), a)
    C[:q_signal] = rng.uniform(-1, 1, (q_signal, r)) @ (np.eye(r) - np.outer(b, b)) \
        + np.outer(rng.choice([-1.0, 1.0], q_signal), b)
    F = _mar1(rng, np.full((k, r), phi), T + 1, BURN_IN, (k, r))
    sd = np.full((p, q), distractor_noise)
    sd[:p_signal, :q_signal] = signal_noise
    X = np.einsum("ik,tkl,jl->tij", R, F[1:], C) + sd * rng.standard_normal((T, p, q))
    b = beta_norm * b
    y = np.einsum("k,tkl,l->t", a, F[:T], b) + target_noise * rng.standard_normal(T)
    return PlantedFixture(
        X, y, tuple(f"r{i:02d}" for i in range(p)), tuple(f"c{j:02d}" for j in range(q)),
        tuple(range(p_signal)), tuple(range(q_signal)), R, C, a, b,
    )
