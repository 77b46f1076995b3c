"""Decay-curve fitting and fidelity estimation.

The primary estimation path fits the two measurement-difference curves,
each a single exponential amplitude * rate^m, by weighted log-linear
initialization followed by damped (Levenberg-Marquardt) weighted least
squares.  A joint fit of the full A + B b^m + C c^m model over all four
datasets is available as a fallback for data where the difference
cancellation is imperfect; multi-exponential fitting is known to be poorly
conditioned, so it is not the default.

Fixed algorithmic constants: damping starts at 1e-3 and moves by factors
of 0.3 (accept) and 10 (reject), the iteration cap is 200, and convergence
is declared at relative step 1e-10.  Confidence intervals are first-order
Gaussian, from the inverse of the weighted normal matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from realrb.channels import avg_fidelity_from_bc, rebit_fidelity_from_b
from realrb.engine import DATASET_LABELS, DecayDataset

_LM_INITIAL_DAMPING = 1e-3
_LM_ACCEPT_FACTOR = 0.3
_LM_REJECT_FACTOR = 10.0
_LM_MAX_ITERATIONS = 200
_LM_RELATIVE_STEP_TOL = 1e-10
_WEAK_IDENTIFICATION_CONDITION = 1e8
_SIGMA_FLOOR = 1e-12
_RATE_SLACK = 1e-9


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with covariance and quality flags."""

    method: str
    param_names: tuple[str, ...]
    values: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]
    residual_norm: float
    n_iterations: int = 0
    flags: tuple[str, ...] = field(default_factory=tuple)

    def value(self, name: str) -> float:
        return self.values[self.param_names.index(name)]

    def stderr(self, name: str) -> float:
        k = self.param_names.index(name)
        return float(np.sqrt(max(self.covariance[k][k], 0.0)))

    @property
    def rates_valid(self) -> bool:
        """Whether every rate-like parameter lies in (0, 1]."""
        flags = {"rate", "b", "c"}
        rates = [v for n, v in zip(self.param_names, self.values) if n in flags]
        return all(0.0 < r <= 1.0 + _RATE_SLACK for r in rates)

    def to_json(self) -> str:
        doc = {
            "method": self.method,
            "parameters": dict(zip(self.param_names, self.values)),
            "param_names": list(self.param_names),
            "covariance": [list(row) for row in self.covariance],
            "residual_norm": self.residual_norm,
            "n_iterations": self.n_iterations,
            "flags": list(self.flags),
            "rates_valid": self.rates_valid,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "FitResult":
        doc = json.loads(text)
        return cls(
            method=doc["method"],
            param_names=tuple(doc["param_names"]),
            values=tuple(doc["parameters"][k] for k in doc["param_names"]),
            covariance=tuple(tuple(row) for row in doc["covariance"]),
            residual_norm=doc["residual_norm"],
            n_iterations=doc["n_iterations"],
            flags=tuple(doc["flags"]),
        )


def _as_points(points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pts = sorted((float(m), float(y), float(s)) for m, y, s in points)
    m = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    sigma = np.maximum(np.array([p[2] for p in pts]), _SIGMA_FLOOR)
    return m, y, sigma


def _damped_least_squares(model_jac, y, sigma, theta0):
    """Weighted Levenberg-Marquardt.  Returns (theta, cov, cost, iters, cond)."""
    theta = np.asarray(theta0, dtype=float).copy()
    f, jac = model_jac(theta)
    r = (f - y) / sigma
    cost = float(r @ r)
    lam = _LM_INITIAL_DAMPING
    iterations = 0
    for iterations in range(1, _LM_MAX_ITERATIONS + 1):
        jw = jac / sigma[:, None]
        grad = jw.T @ r
        normal = jw.T @ jw
        damping = np.diag(np.diag(normal)) + 1e-30 * np.eye(len(theta))
        try:
            step = np.linalg.solve(normal + lam * damping, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(normal + lam * damping, -grad, rcond=None)[0]
        trial = theta + step
        f_trial, jac_trial = model_jac(trial)
        r_trial = (f_trial - y) / sigma
        cost_trial = float(r_trial @ r_trial)
        if cost_trial <= cost:
            rel_step = np.max(np.abs(step) / (np.abs(theta) + 1e-30))
            theta, f, jac, r, cost = trial, f_trial, jac_trial, r_trial, cost_trial
            lam = max(lam * _LM_ACCEPT_FACTOR, 1e-14)
            if rel_step < _LM_RELATIVE_STEP_TOL:
                break
        else:
            lam *= _LM_REJECT_FACTOR
            if lam > 1e14:
                break
    jw = jac / sigma[:, None]
    normal = jw.T @ jw
    cov = np.linalg.pinv(normal)
    cond = float(np.linalg.cond(normal))
    return theta, cov, float(np.sqrt(cost)), iterations, cond


def fit_single_exponential(points, offset: bool = False) -> FitResult:
    """Fit y = amplitude * rate^m to weighted points (m, y, sigma).

    With ``offset=True`` the model gains a constant term,
    y = offset + amplitude * rate^m, which absorbs the residual that a
    non-unital measurement error leaves in a difference curve.

    Non-identifiable inputs (all data at the noise floor, exactly constant
    data, or too few positive values to even start) come back flagged, with
    best-effort parameter values.
    """
    m, y, sigma = _as_points(points)
    if len(set(m.tolist())) < (4 if offset else 3):
        raise ValueError("too few distinct sequence lengths for the model")

    names = ("offset", "amplitude", "rate") if offset else ("amplitude", "rate")

    def flagged(values, flags, rnorm=0.0):
        k = len(names)
        cov = tuple(tuple(np.inf if i == j else 0.0 for j in range(k)) for i in range(k))
        return FitResult(
            method="single-exponential",
            param_names=names,
            values=values,
            covariance=cov,
            residual_norm=rnorm,
            flags=tuple(flags),
        )

    flags: list[str] = []
    if np.all(np.abs(y) <= 3.0 * sigma):
        flags += ["below-noise-floor", "non-identifiable"]
    if np.ptp(y) == 0.0:
        # no decay information at all; report the constant curve
        values = (0.0, float(y[0]), 1.0) if offset else (float(y[0]), 1.0)
        return flagged(values, dict.fromkeys(flags + ["constant-data", "non-identifiable"]))

    base = float(y[np.argmax(m)]) if offset else 0.0
    resid = y - base
    positive = resid > 0
    if positive.sum() >= 2:
        # weighted regression in log space; weights (y/sigma)^2
        w = (resid[positive] / sigma[positive]) ** 2
        mm, ly = m[positive], np.log(resid[positive])
        wsum = w.sum()
        mbar = (w * mm).sum() / wsum
        lbar = (w * ly).sum() / wsum
        slope = ((w * (mm - mbar) * (ly - lbar)).sum()) / ((w * (mm - mbar) ** 2).sum() + 1e-300)
        exp_init = [np.exp(lbar - slope * mbar), np.exp(slope)]
    elif positive.sum() == 1:
        flags.append("log-init-degenerate")
        exp_init = [float(resid[positive][0]), 0.5]
    else:
        values = (base, float(resid[0]), 0.0) if offset else (float(y[0]), 0.0)
        return flagged(
            values,
            dict.fromkeys(flags + ["non-identifiable"]),
            rnorm=float(np.linalg.norm(y / sigma)),
        )
    theta0 = np.array([base] + exp_init if offset else exp_init)

    m_int = m.astype(int)  # integer exponents keep negative rates well-defined

    def model_jac(theta):
        amp, rate = theta[-2], theta[-1]
        powers = rate**m_int
        f = amp * powers + (theta[0] if offset else 0.0)
        dpow = m * rate ** (m_int - 1)
        cols = [powers, amp * dpow]
        if offset:
            cols.insert(0, np.ones_like(powers))
        return f, np.column_stack(cols)

    theta, cov, rnorm, iters, cond = _damped_least_squares(model_jac, y, sigma, theta0)
    if cond > _WEAK_IDENTIFICATION_CONDITION:
        flags.append("weakly-identified")
    return FitResult(
        method="single-exponential",
        param_names=names,
        values=tuple(float(v) for v in theta),
        covariance=tuple(tuple(float(c) for c in row) for row in cov),
        residual_norm=rnorm,
        n_iterations=iters,
        flags=tuple(flags),
    )


def difference_estimators(
    data: DecayDataset, fit_offset: bool = False
) -> tuple[FitResult, FitResult]:
    """Fit the two measurement-difference curves of a four-label dataset.

    The symmetric-preparation difference estimates the rate b, the
    antisymmetric one estimates c; difference uncertainties combine the row
    standard errors in quadrature.  ``fit_offset=True`` adds a constant
    term to each curve, for data whose SPAM errors spoil the exact
    cancellation of the offsets.
    """
    rows = data.row_map()
    lengths = data.lengths()
    for m in lengths:
        for label in DATASET_LABELS:
            if (m, *label) not in rows:
                raise ValueError(f"dataset is missing label {label} at m={m}")
    results = []
    for prep in ("plus", "minus"):
        pts = []
        for m in lengths:
            hi = rows[(m, prep, "plus")]
            lo = rows[(m, prep, "minus")]
            pts.append((m, hi.mean - lo.mean, np.hypot(hi.stderr, lo.stderr)))
        fit = fit_single_exponential(pts, offset=fit_offset)
        results.append(replace(fit, method=f"difference-{prep}"))
    return results[0], results[1]


def _joint_model(m, label_idx, n_labels):
    m_int = m.astype(int)

    def model_jac(theta):
        b, c = theta[-2], theta[-1]
        f = np.empty_like(m, dtype=float)
        jac = np.zeros((len(m), 3 * n_labels + 2))
        bp = b**m_int
        cp = c**m_int
        dbp = m * b ** (m_int - 1)
        dcp = m * c ** (m_int - 1)
        for k in range(n_labels):
            sel = label_idx == k
            a_k, b_k, c_k = theta[3 * k : 3 * k + 3]
            f[sel] = a_k + b_k * bp[sel] + c_k * cp[sel]
            jac[sel, 3 * k] = 1.0
            jac[sel, 3 * k + 1] = bp[sel]
            jac[sel, 3 * k + 2] = cp[sel]
            jac[sel, -2] = b_k * dbp[sel]
            jac[sel, -1] = c_k * dcp[sel]
        return f, jac

    return model_jac


def full_model_fit(data, init: dict | None = None) -> FitResult:
    """Joint damped least-squares fit of A + B b^m + C c^m.

    ``data`` is either a list of (m, y, sigma) points for a single curve
    (five parameters) or a DecayDataset (per-label offsets with shared
    decay rates, initialized from the difference estimators).  Weak
    identification, e.g. an ill-split B/C when b = c, is reported via a
    flag derived from the condition number of the normal matrix.
    """
    if isinstance(data, DecayDataset):
        return _full_model_fit_dataset(data, init)
    m, y, sigma = _as_points(data)
    if len(set(m.tolist())) < 5:
        raise ValueError("need at least 5 distinct sequence lengths")
    if init is None:
        a0 = float(y[np.argmax(m)])
        tail = fit_single_exponential([(mi, yi - a0, si) for mi, yi, si in zip(m, y, sigma)])
        init = {
            "A": a0,
            "B": tail.value("amplitude"),
            "C": 0.0,
            "b": min(max(tail.value("rate"), 0.01), 1.0),
            "c": 0.8 * min(max(tail.value("rate"), 0.01), 1.0),
        }
    theta0 = np.array([init["A"], init["B"], init["C"], init["b"], init["c"]])
    label_idx = np.zeros(len(m), dtype=int)
    theta, cov, rnorm, iters, cond = _damped_least_squares(
        _joint_model(m, label_idx, 1), y, sigma, theta0
    )
    flags = ("weakly-identified",) if cond > _WEAK_IDENTIFICATION_CONDITION else ()
    return FitResult(
        method="full-model",
        param_names=("A", "B", "C", "b", "c"),
        values=tuple(float(v) for v in theta),
        covariance=tuple(tuple(float(x) for x in row) for row in cov),
        residual_norm=rnorm,
        n_iterations=iters,
        flags=flags,
    )


def _full_model_fit_dataset(data: DecayDataset, init: dict | None) -> FitResult:
    b_fit, c_fit = difference_estimators(data)
    rows = sorted(data.rows, key=lambda r: (r.m, DATASET_LABELS.index((r.prep, r.meas))))
    m = np.array([r.m for r in rows], dtype=float)
    y = np.array([r.mean for r in rows])
    sigma = np.maximum(np.array([r.stderr for r in rows]), _SIGMA_FLOOR)
    label_idx = np.array([DATASET_LABELS.index((r.prep, r.meas)) for r in rows])

    theta0 = np.empty(3 * len(DATASET_LABELS) + 2)
    offsets = decay_offsets(data)
    for k, label in enumerate(DATASET_LABELS):
        theta0[3 * k : 3 * k + 3] = offsets[label]
    b0 = b_fit.value("rate") if b_fit.rates_valid else 0.95
    c0 = c_fit.value("rate") if c_fit.rates_valid else b0
    theta0[-2:] = (b0, c0)
    if init is not None:
        theta0[-2] = init.get("b", theta0[-2])
        theta0[-1] = init.get("c", theta0[-1])

    theta, cov, rnorm, iters, cond = _damped_least_squares(
        _joint_model(m, label_idx, len(DATASET_LABELS)), y, sigma, theta0
    )
    flags = ("weakly-identified",) if cond > _WEAK_IDENTIFICATION_CONDITION else ()
    names = []
    for label in DATASET_LABELS:
        tag = f"{label[0]}_{label[1]}"
        names += [f"A_{tag}", f"B_{tag}", f"C_{tag}"]
    names += ["b", "c"]
    return FitResult(
        method="full-model-joint",
        param_names=tuple(names),
        values=tuple(float(v) for v in theta),
        covariance=tuple(tuple(float(x) for x in row) for row in cov),
        residual_norm=rnorm,
        n_iterations=iters,
        flags=flags,
    )


def decay_offsets(data: DecayDataset) -> dict:
    """Per-label (A, B, C) offsets for model curves and fit initialization.

    Recomputed from the SPAM model embedded in the dataset config when
    possible, falling back to data-driven guesses.
    """
    from realrb.engine import ExperimentConfig, abc_from_spam, spam_arrays

    out = {}
    if data.config:
        try:
            cfg_dict = dict(data.config)
            cfg_dict["lengths"] = tuple(cfg_dict["lengths"])
            cfg = ExperimentConfig(**cfg_dict)
            preps, effects = spam_arrays(cfg)
            for prep, meas in DATASET_LABELS:
                out[(prep, meas)] = abc_from_spam(preps[prep], effects[(prep, meas)])
            return out
        except (KeyError, TypeError, ValueError):
            out = {}
    for prep, meas in DATASET_LABELS:
        series = data.series(prep, meas)
        if not series:
            raise ValueError(f"dataset is missing the ({prep}, {meas}) series")
        a0 = series[-1].mean
        amp = series[0].mean - a0
        if prep == "plus":
            out[(prep, meas)] = (a0, amp, 0.0)
        else:
            out[(prep, meas)] = (a0, 0.0, amp)
    return out


@dataclass(frozen=True)
class FidelityEstimate:
    average: float
    average_stderr: float
    rebit: float
    rebit_stderr: float

    def to_dict(self) -> dict:
        return {
            "average_fidelity": self.average,
            "average_fidelity_stderr": self.average_stderr,
            "rebit_fidelity": self.rebit,
            "rebit_fidelity_stderr": self.rebit_stderr,
        }


def estimate_fidelities(b_result: FitResult, c_result: FitResult, d: int) -> FidelityEstimate:
    """Plug fitted rates into the two fidelity formulas.

    First-order uncertainty propagation; the two rate estimates come from
    disjoint data and are treated as independent.
    """
    b, c = b_result.value("rate"), c_result.value("rate")
    sb, sc = b_result.stderr("rate"), c_result.stderr("rate")
    grad_b = (d * d + d - 2) / (2 * d * (d + 1))
    grad_c = (d - 1) / (2 * (d + 1))
    avg_err = float(np.hypot(grad_b * sb, grad_c * sc))
    rebit_err = float((d - 1) / d * sb)
    return FidelityEstimate(
        average=avg_fidelity_from_bc(b, c, d),
        average_stderr=avg_err,
        rebit=rebit_fidelity_from_b(b, d),
        rebit_stderr=rebit_err,
    )
