import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdiscord.channels import noisy_state, scattering_mixture
from cvdiscord.discord import (
    PAC_FIT_COEFFS,
    QubitPOVM,
    branch_probabilities,
    canonical_angles,
    channel_discord,
    conditional_entropy,
    discord_dp_closed,
    discord_dp_from_variance,
    discord_numeric,
    discord_pa_fit,
    displaced_povm,
    pac_branch_spectrum,
    phi_spread,
    qd_variance_parametric,
    qd_variance_point,
)
from cvdiscord.errors import TruncationError
from cvdiscord.fock import DensityMatrix, HilbertSpec, entropy_from_spectrum, partial_trace, von_neumann_entropy
from cvdiscord.homodyne import reduced_entropy_closed
from cvdiscord.states import embed_displaced, mode_amplitude

# frozen from an independent full-Fock brute-force evaluation (see _brute_discord)
REFERENCE = [
    ("pac", 1.0, 0.6, 0.0, 0.2181127770688836),
    ("pac", 3.0, 0.6, 0.0, 0.015366343832164588),
    ("pac", 0.5, 0.9, 0.0, 0.630657651271967),
    ("dpc", 2.0, 1.0, 1.5, 0.36518847344079086),
    ("dpc", 0.0, 1.0, 1.5, 0.07742475528936374),
    ("pac", 2.0, 1.0, 0.5, 0.058659325898048786),
    ("dpc", 2.0, 0.8, 0.5, 0.36587752897481995),
    ("pac", 1.0, 0.8, 0.3, 0.21553617726082513),
]


def _brute_conditional(rho: DensityMatrix, theta, phi, alpha):
    da, db = rho.space.mode_dims
    t = rho.matrix.reshape(da, db, da, db)
    total = 0.0
    for e in displaced_povm(theta, phi, alpha, db):
        sub = np.einsum("ajbk,kj->ab", t, e)
        p = float(np.trace(sub).real)
        if p > 1e-14:
            total += p * entropy_from_spectrum(np.linalg.eigvalsh(0.5 * (sub + sub.conj().T) / p))
    return total


def _brute_discord(rho: DensityMatrix, alpha, n=41):
    s_b = von_neumann_entropy(partial_trace(rho, [1]))
    s_ab = von_neumann_entropy(rho)
    best = min(
        _brute_conditional(rho, t, p, alpha)
        for t in np.linspace(0, math.pi, n)
        for p in np.linspace(0, math.pi, n)
    )
    return s_b - s_ab + best


@pytest.mark.parametrize("kind,alpha0,eta,sigma,expected", REFERENCE)
def test_frozen_reference_values(kind, alpha0, eta, sigma, expected):
    assert channel_discord(kind, alpha0, eta, sigma).value == pytest.approx(expected, abs=1e-8)


def test_brute_force_oracle_agrees():
    # coarse grid search on full Fock matrices, independent of the block reduction
    rho = noisy_state("pac", 1.0, 0.8, 0.3)
    alpha = mode_amplitude(1.0)
    brute = _brute_discord(rho, alpha, n=25)
    fast = discord_numeric(rho, alpha).value
    assert fast <= brute + 1e-10
    assert brute - fast < 2e-3


def test_conditional_entropy_block_vs_brute():
    rho = noisy_state("dpc", 1.5, 0.7, 0.4)
    alpha = mode_amplitude(1.5)
    for theta, phi in [(0.3, 1.1), (math.pi / 2, 0.0), (2.5, 2.9)]:
        a = conditional_entropy(rho, QubitPOVM(theta, phi, alpha))
        b = _brute_conditional(rho, theta, phi, alpha)
        assert a == pytest.approx(b, abs=1e-10)


def test_displaced_basis_matches_fock_route():
    rho = scattering_mixture("pac", 1.2, 0.7)
    fock = embed_displaced(rho)
    a = discord_numeric(rho).value
    b = discord_numeric(fock, mode_amplitude(1.2)).value
    assert a == pytest.approx(b, abs=1e-8)


def test_fock_state_needs_alpha():
    fock = embed_displaced(scattering_mixture("dpc", 1.0, 0.5))
    with pytest.raises(ValueError):
        discord_numeric(fock)


def test_leakage_raises_truncation_error():
    # Bob's displaced qubit at alpha=3 lives far outside a state built around alpha=0.7
    rho = embed_displaced(scattering_mixture("dpc", 1.0, 0.5), HilbertSpec((16, 16)))
    with pytest.raises(TruncationError):
        discord_numeric(rho, 3.0)


def test_branch_probabilities_sum_to_one():
    rho = scattering_mixture("pac", 2.0, 0.4)
    probs = branch_probabilities(rho, QubitPOVM(1.1, 0.4, mode_amplitude(2.0)))
    assert sum(probs) == pytest.approx(1.0, abs=1e-12)
    assert all(p >= -1e-14 for p in probs)


@pytest.mark.parametrize("eta", [0.0, 1e-9, 0.3, 0.5, 0.9, 1 - 1e-9, 1.0])
def test_dpc_closed_endpoints_and_interior(eta):
    v = discord_dp_closed(eta)
    assert 0.0 <= v <= 1.0
    if eta in (0.0, 1.0):
        assert v == float(eta)


def test_dpc_closed_reference_point():
    assert discord_dp_closed(0.5) == pytest.approx(0.543300778206, abs=1e-10)


@pytest.mark.parametrize("eta", np.linspace(0.05, 0.95, 19))
def test_variance_form_identity(eta):
    assert discord_dp_from_variance((1 + eta) / 2) == pytest.approx(discord_dp_closed(eta), abs=1e-10)


def test_closed_forms_reject_bad_input():
    with pytest.raises(ValueError):
        discord_dp_closed(1.5)
    with pytest.raises(ValueError):
        discord_dp_from_variance(0.3)
    with pytest.raises(ValueError):
        discord_pa_fit(11.0, 0.9)
    with pytest.raises(ValueError):
        discord_pa_fit(1.0, 0.2)


@pytest.mark.parametrize("alpha0", [0.0, 1.0, 3.0])
@pytest.mark.parametrize("eta", [0.2, 0.5, 0.8])
def test_dpc_numeric_matches_closed(alpha0, eta):
    assert channel_discord("dpc", alpha0, eta).value == pytest.approx(discord_dp_closed(eta), abs=1e-6)


@pytest.mark.parametrize("alpha0", [0.0, 1.0, 3.0])
def test_optimal_angles(alpha0):
    d = channel_discord("dpc", alpha0, 0.6)
    assert d.theta == pytest.approx(math.pi / 2, abs=1e-6)
    assert d.phi == pytest.approx(0.0, abs=1e-6)
    p = channel_discord("pac", alpha0, 0.6)
    if alpha0 == 0.0:
        # without coherent amplitude the photon-added state is the displaced-photon
        # one up to a phase flip on B: the whole equator is optimal, phi=0 reported
        assert (p.theta, p.phi) == pytest.approx((math.pi / 2, 0.0), abs=1e-6)
        assert phi_spread(scattering_mixture("pac", 0.0, 0.6), math.pi / 2) < 1e-10
    else:
        assert (p.theta, p.phi) == pytest.approx((math.pi / 2, math.pi / 2), abs=1e-6)


def test_pac_conditional_entropy_at_optimum_closed_form():
    for alpha0, eta in [(0.5, 0.3), (1.0, 0.7), (2.0, 0.9)]:
        d = channel_discord("pac", alpha0, eta)
        assert d.conditional_entropy == pytest.approx(entropy_from_spectrum(pac_branch_spectrum(alpha0, eta)), abs=1e-9)


def test_dpc_phi_is_irrelevant():
    rho = scattering_mixture("dpc", 1.0, 0.5)
    assert phi_spread(rho, math.pi / 2) < 1e-10
    assert phi_spread(scattering_mixture("pac", 1.0, 0.5), math.pi / 2) > 1e-3


@pytest.mark.parametrize("kind", ["dpc", "pac"])
def test_pure_state_discord_is_entanglement_entropy(kind):
    for alpha0 in (0.0, 0.7, 2.0):
        d = channel_discord(kind, alpha0, 1.0)
        assert d.value == pytest.approx(reduced_entropy_closed(kind, alpha0), abs=1e-8)


@pytest.mark.parametrize("kind", ["dpc", "pac"])
def test_monotone_in_eta(kind):
    vals = [channel_discord(kind, 1.0, e).value for e in np.linspace(0.1, 0.9, 9)]
    assert all(b >= a - 1e-6 for a, b in zip(vals, vals[1:]))


def test_pac_fit_tracks_numeric():
    # the published polynomial is a least-squares fit, good to ~0.07 bits
    worst = 0.0
    for alpha0 in (0.0, 1.0, 2.5, 5.0, 10.0):
        for eta in (0.5, 0.75, 1.0):
            worst = max(worst, abs(discord_pa_fit(alpha0, eta) - channel_discord("pac", alpha0, eta).value))
    assert worst < 0.075


def test_pac_fit_value():
    assert discord_pa_fit(0.0, 1.0) == pytest.approx(sum(c for (i, j), c in PAC_FIT_COEFFS.items() if i == 0))
    assert discord_pa_fit(0.0, 1.0) == pytest.approx(0.997938, abs=1e-6)


@pytest.mark.parametrize("kind", ["dpc", "pac"])
def test_small_noise_is_continuous(kind):
    a = channel_discord(kind, 2.0, 1.0, 0.0).value
    b = channel_discord(kind, 2.0, 1.0, 1e-4).value
    assert abs(a - b) < 1e-5


def test_noise_meta():
    res = channel_discord("dpc", 1.0, 0.9, 0.5)
    assert res.meta["phase_converged"] and res.meta["phase_nodes"] > 0
    assert res.meta["truncation_dim"] > 2
    assert channel_discord("dpc", 1.0, 0.9).meta["truncation_dim"] == 2


def test_canonical_angles():
    assert canonical_angles(0.13, -2.7e-7) == (0.13, 0.0)
    assert canonical_angles(math.pi - 1e-8, 1.0) == (pytest.approx(math.pi), 0.0)
    t, p = canonical_angles(1.0, 4.0)
    assert (t, p) == pytest.approx((math.pi - 1.0, 4.0 - math.pi))
    t, p = canonical_angles(-0.5, 0.3)
    assert 0 <= t <= math.pi and 0 <= p < math.pi


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-10, 10),
    st.floats(-10, 10),
)
def test_canonical_angles_same_measurement(theta, phi):
    rho = scattering_mixture("pac", 1.0, 0.6)
    t, p = canonical_angles(theta, phi)
    assert 0 <= t <= math.pi and 0 <= p < math.pi
    a = conditional_entropy(rho, QubitPOVM(theta, phi, mode_amplitude(1.0)))
    b = conditional_entropy(rho, QubitPOVM(t, p, mode_amplitude(1.0)))
    assert a == pytest.approx(b, abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(
    st.sampled_from(["dpc", "pac"]),
    st.floats(0.0, 3.0),
    st.floats(0.0, 1.0),
)
def test_discord_bounds(kind, alpha0, eta):
    d = channel_discord(kind, alpha0, eta)
    assert -1e-12 <= d.value <= d.mutual_information + 1e-9
    assert d.value <= d.s_b + 1e-9
    assert d.classical_correlation >= -1e-9


def test_qd_variance_point_and_limits():
    pt = qd_variance_point("dpc", 1.0, 0.6, 0.0)
    assert pt.variance == pytest.approx(0.8)
    assert pt.discord == pytest.approx(discord_dp_from_variance(0.8), abs=1e-6)
    assert qd_variance_point("dpc", 1.0, 0.0, 0.0).limit == "eta->0"
    assert qd_variance_point("dpc", 1.0, 1.0, 0.0).limit == "eta->1"
    assert qd_variance_point("dpc", 1.0, 1.0, 0.2).limit == ""
    pts = qd_variance_parametric("pac", 1.0, etas=(0.5, 1.0), sigmas=(0.0, 0.2))
    assert [(p.eta, p.sigma) for p in pts] == [(0.5, 0.0), (0.5, 0.2), (1.0, 0.0), (1.0, 0.2)]
