import numpy as np
import pytest
from scipy.stats import norm

import bpire_lab.conditioned as conditioned
from bpire_lab.conditioned import (
    RejectionExhausted,
    resample_by_weight,
    sample_conditioned_batch,
    sample_conditioned_negative,
    sample_conditioned_positive,
)
from bpire_lab.stats import ks_against_cdf, ks_two_sample


@pytest.mark.parametrize("method", ["rejection", "h-transform"])
def test_positive_paths_stay_nonnegative(std_model, std_tables, rng, method):
    batch = sample_conditioned_batch(std_model, 12, method, 500, rng,
                                     "positive", std_tables)
    assert batch.s.shape == (500, 13)
    assert np.all(batch.s[:, 0] == 0.0)
    assert batch.s[:, 1:].min() >= 0.0


@pytest.mark.parametrize("method", ["rejection", "h-transform"])
def test_negative_paths_stay_negative(std_model, std_tables, rng, method):
    batch = sample_conditioned_batch(std_model, 12, method, 500, rng,
                                     "negative", std_tables)
    assert batch.s[:, 1:].max() < 0.0


def test_single_path_wrappers(std_model, std_tables, rng):
    p = sample_conditioned_positive(std_model, 8, "rejection", rng, std_tables)
    assert p.s[1:].min() >= 0.0
    q = sample_conditioned_negative(std_model, 8, "h-transform", rng, std_tables)
    assert q.s[1:].max() < 0.0


def test_methods_agree_on_conditional_face(std_model, std_tables, rng):
    reps = 6000
    rej = sample_conditioned_batch(std_model, 5, "rejection", reps, rng,
                                   "positive", std_tables)
    hfl = sample_conditioned_batch(std_model, 5, "h-transform", reps, rng,
                                   "positive", std_tables)
    ks = ks_two_sample(rej.terminal, hfl.terminal, None, hfl.cond_weights)
    assert ks.statistic <= 0.05


def test_methods_agree_on_reweighted_face(std_model, std_tables, rng):
    reps = 6000
    rej = sample_conditioned_batch(std_model, 5, "rejection", reps, rng,
                                   "positive", std_tables)
    hfl = sample_conditioned_batch(std_model, 5, "h-transform", reps, rng,
                                   "positive", std_tables)
    ks = ks_two_sample(rej.terminal, hfl.terminal, rej.tilt_weights, None)
    assert ks.statistic <= 0.05


def test_faces_differ_at_small_horizons(std_model, std_tables, rng):
    # the renewal tilt is a genuine change of measure: the conditional
    # and reweighted laws of S_5 are far apart
    rej = sample_conditioned_batch(std_model, 5, "rejection", 6000, rng,
                                   "positive", std_tables)
    hfl = sample_conditioned_batch(std_model, 5, "h-transform", 6000, rng,
                                   "positive", std_tables)
    ks = ks_two_sample(rej.terminal, hfl.terminal)
    assert ks.statistic > 0.1


def test_conditional_expectation_consistency(std_model, std_tables, rng):
    # self-normalized estimates of E(phi | conditioning) agree across
    # methods within combined Monte Carlo error
    reps = 20_000
    phi = lambda s: np.exp(-s)  # noqa: E731
    rej = sample_conditioned_batch(std_model, 6, "rejection", reps, rng,
                                   "positive", std_tables)
    hfl = sample_conditioned_batch(std_model, 6, "h-transform", reps, rng,
                                   "positive", std_tables)
    est_rej = phi(rej.terminal).mean()
    se_rej = phi(rej.terminal).std(ddof=1) / np.sqrt(reps)
    w = hfl.cond_weights
    vals = phi(hfl.terminal)
    est_h = np.sum(w * vals)
    # delta-method standard error for the self-normalized estimator
    se_h = np.sqrt(np.sum((w * (vals - est_h)) ** 2))
    assert abs(est_rej - est_h) <= 3.0 * np.hypot(se_rej, se_h)


def test_single_step_law_reweighted_face(std_model, std_tables, rng):
    # at horizon 1 the reweighted law has density proportional to
    # phi(s) v(s) on s >= 0; check against a quadrature oracle
    reps = 20_000
    hfl = sample_conditioned_batch(std_model, 1, "h-transform", reps, rng,
                                   "positive", std_tables)
    grid = np.linspace(0.0, 6.0, 2001)
    dens = norm.pdf(grid) * std_tables.v_at(grid)
    cdf_vals = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0
                                                * np.diff(grid))])
    cdf_vals /= cdf_vals[-1]
    oracle = lambda x: np.interp(x, grid, cdf_vals)  # noqa: E731
    ks = ks_against_cdf(hfl.terminal, oracle)
    assert ks.statistic <= 0.03


def test_single_step_law_conditional_face(std_model, rng):
    # at horizon 1 the conditional law is the half-normal
    rej = sample_conditioned_batch(std_model, 1, "rejection", 20_000, rng,
                                   "positive")
    oracle = lambda x: np.clip(2.0 * norm.cdf(x) - 1.0, 0.0, 1.0)  # noqa: E731
    ks = ks_against_cdf(rej.terminal, oracle)
    assert ks.statistic <= 0.02


def test_rejection_exhaustion(std_model, rng, monkeypatch):
    monkeypatch.setattr(conditioned, "REJECTION_CAP", 4)
    with pytest.raises(RejectionExhausted):
        sample_conditioned_batch(std_model, 4000, "rejection", 2, rng, "positive")


def test_requires_tables_for_h_transform(std_model, rng):
    with pytest.raises(ValueError):
        sample_conditioned_batch(std_model, 4, "h-transform", 10, rng, "positive")


def test_unknown_method_and_side(std_model, rng):
    with pytest.raises(ValueError):
        sample_conditioned_batch(std_model, 4, "metropolis", 10, rng, "positive")
    with pytest.raises(ValueError):
        sample_conditioned_batch(std_model, 4, "rejection", 10, rng, "sideways")


def test_resample_by_weight(rng):
    vals = np.array([0.0, 1.0, 2.0])
    w = np.array([0.0, 0.0, 1.0])
    out = resample_by_weight(vals, w, 50, rng)
    assert np.all(out == 2.0)
