from dataclasses import replace
from fractions import Fraction

import pytest

from canonical import CanonicalForm, LevelMismatchError, phi, random_form
from exact_linalg import nullspace, quadratic_vanishes_on_span
from helpers import RecordError
from iso_engine import (
    Certificate,
    CertifiedIso,
    CertifiedNonIso,
    GaugeCandidate,
    GaugeError,
    GaugeLayout,
    OrbitSampleError,
    TruncationParams,
    Undecided,
    assemble_necessity_system,
    assemble_sufficiency_system,
    conjugate,
    decide_iso,
    decide_splitting,
    orbit_b_window,
    orbit_sample,
    splits_at_level,
    transport_witness_down,
    transport_witness_up,
    verify_certificate,
)
from laurent import ONE, ZERO, BiLaurent, GaussianRational, U, V

SCALES = [GaussianRational(2), GaussianRational(-1), GaussianRational(Fraction(1, 3)), GaussianRational(0, 1)]


# =============================================================================
# TYPY
# =============================================================================


def test_truncation_params_defaults_and_clamping():
    params = TruncationParams.default_for(3)
    assert (params.U, params.Z, params.deepening_cap) == (6, 12, 2)
    assert params.deepened() == TruncationParams(8, 16, 2)
    assert params.z_cap(3) == 6
    assert TruncationParams(0, 0).for_level(3) == TruncationParams(4, 7)


def test_deepening_cap_env_override(monkeypatch):
    monkeypatch.setenv("BLOWUP_DEEPENING_CAP", "0")
    assert TruncationParams.default_for(2).deepening_cap == 0


def test_gauge_rejects_negative_z_exponents():
    with pytest.raises(GaugeError):
        GaugeCandidate(BiLaurent.monomial(0, -1), BiLaurent.zero(), BiLaurent.zero(), BiLaurent.constant(1))


def test_gauge_layout_is_column_major():
    layout = GaugeLayout(U=2, Z=3)
    assert layout.size == 4 * 3 * 4
    assert layout.index("a", 0, 0) == 0
    assert layout.index("b", 1, 2) == 12 + 1 * 4 + 2
    assert layout.label(layout.index("d", 2, 3)) == ("d", 2, 3)
    gauge = GaugeCandidate(V + 1, U, BiLaurent.zero(), BiLaurent.constant(2))
    assert layout.vector_to_gauge(layout.gauge_to_vector(gauge)) == gauge


def test_conjugate_of_identity_is_change_of_form():
    p = random_form(2, seed=1)
    pprime = random_form(2, seed=2)
    conj = conjugate(p, pprime, GaugeCandidate.identity())
    assert conj.alpha == 1
    assert conj.delta == 1
    assert conj.gamma.is_zero()
    assert conj.beta == BiLaurent.monomial(0, 2) * (pprime.p - p.p)


# =============================================================================
# DECYZJA
# =============================================================================


@pytest.mark.parametrize("j", [2, 3])
def test_reflexivity(j):
    for seed in range(10):
        p = random_form(j, seed)
        verdict = decide_iso(p, p)
        assert isinstance(verdict, CertifiedIso)
        assert verify_certificate(verdict.certificate)


@pytest.mark.parametrize("scale", SCALES)
def test_scale_family_is_isomorphic(scale):
    for seed in range(5):
        p = random_form(2, seed)
        verdict = decide_iso(p, CanonicalForm(2, p.p.scale(scale)))
        assert isinstance(verdict, CertifiedIso)
        assert verify_certificate(verdict.certificate)


def test_hand_example_is_not_isomorphic(hand_pair):
    p, zero = hand_pair
    verdict = decide_iso(p, zero)
    assert isinstance(verdict, CertifiedNonIso)
    assert (verdict.U, verdict.Mz) == (4, 4)


def test_hand_example_rows_force_a00_and_b00(hand_pair):
    p, zero = hand_pair
    system = assemble_necessity_system(p, zero, TruncationParams.default_for(2))
    layout = system.layout
    rows = dict(zip(system.row_labels, system.matrix.entries))
    assert rows[("beta", 1, 2)] == {layout.index("a", 0, 0): -ONE}
    assert rows[("beta", 0, 4)] == {layout.index("b", 0, 0): ONE}


@pytest.mark.parametrize("j", [2, 3])
def test_decisions_are_symmetric(j):
    for seed in range(4):
        p = random_form(j, seed)
        random_q = random_form(j, seed + 100)
        orbit_q, _ = orbit_sample(p, seed)
        for q in (random_q, orbit_q):
            forward = decide_iso(p, q)
            backward = decide_iso(q, p)
            assert isinstance(forward, CertifiedIso) == isinstance(backward, CertifiedIso)
            assert isinstance(forward, CertifiedNonIso) == isinstance(backward, CertifiedNonIso)


def test_dropping_a_necessity_row_class_keeps_orbit_pairs_open():
    params = TruncationParams.default_for(2)
    row_classes = [
        lambda label: label.uexp == params.U,
        lambda label: label.zexp == params.z_cap(2),
    ]
    for seed in range(5):
        p = random_form(2, seed)
        pprime, _ = orbit_sample(p, seed)
        system = assemble_necessity_system(p, pprime, params)
        form = system.layout.determinant_form()
        assert not quadratic_vanishes_on_span(form, nullspace(system.matrix)).vanishes
        for predicate in row_classes:
            reduced = system.without_rows(predicate)
            assert reduced.matrix.rows <= system.matrix.rows
            assert not any(predicate(label) for label in reduced.row_labels)
            assert not quadratic_vanishes_on_span(form, nullspace(reduced.matrix)).vanishes


def test_level_mismatch_raises():
    with pytest.raises(LevelMismatchError):
        decide_iso(CanonicalForm.zero(2), CanonicalForm.zero(3))


def test_level_one_is_a_single_point():
    verdict = decide_iso(CanonicalForm.zero(1), CanonicalForm.zero(1))
    assert isinstance(verdict, CertifiedIso)


def test_truncated_witness_satisfies_necessity_system():
    p = random_form(2, seed=4)
    pprime, cert = orbit_sample(p, seed=4)
    params = TruncationParams.default_for(2)
    system = assemble_necessity_system(p, pprime, params)
    vector = system.layout.gauge_to_vector(cert.gauge.truncate_u(params.U))
    assert all(value == ZERO for value in system.matrix.apply(vector))


def test_sufficiency_solution_is_exact_witness():
    p = random_form(2, seed=6)
    pprime, cert = orbit_sample(p, seed=6)
    system = assemble_sufficiency_system(p, pprime, TruncationParams.default_for(2))
    vector = system.layout.gauge_to_vector(cert.gauge)
    assert all(value == ZERO for value in system.matrix.apply(vector))


def test_orbit_pairs_are_decided_isomorphic():
    for seed in range(5):
        p = random_form(2, seed)
        pprime, _ = orbit_sample(p, seed)
        verdict = decide_iso(p, pprime)
        assert isinstance(verdict, CertifiedIso)
        assert verify_certificate(verdict.certificate)


def test_nonisomorphism_is_monotone_under_deepening(hand_pair):
    p, zero = hand_pair
    params = TruncationParams.default_for(2)
    for larger in (params.deepened(), params.deepened().deepened()):
        assert isinstance(decide_iso(p, zero, larger), CertifiedNonIso)


def test_verdict_records():
    assert CertifiedNonIso(U=4, Mz=4).to_record() == {"verdict": "CertifiedNonIso", "U": 4, "Mz": 4}
    assert Undecided(U=8, Z=16).to_record() == {"verdict": "Undecided", "U": 8, "Z": 16}


# =============================================================================
# CERTYFIKATY
# =============================================================================


def test_certificate_record_round_trip():
    p = random_form(2, seed=3)
    _, cert = orbit_sample(p, seed=3)
    restored = Certificate.from_record(cert.to_record())
    assert restored == cert
    assert verify_certificate(restored)


def test_certificate_record_validation():
    with pytest.raises(RecordError):
        Certificate.from_record({"j": 2, "p": [], "pprime": []})


@pytest.mark.parametrize("params", [{}, {"U": 4}, {"U": 4, "Z": 8, "cap": 2}])
def test_certificate_record_requires_complete_params(params):
    record = Certificate(2, CanonicalForm.zero(2), CanonicalForm.zero(2), GaugeCandidate.identity()).to_record()
    record["params"] = params
    with pytest.raises(RecordError):
        Certificate.from_record(record)


def test_certificate_record_accepts_missing_params():
    cert = Certificate(2, CanonicalForm.zero(2), CanonicalForm.zero(2), GaugeCandidate.identity())
    assert cert.to_record()["params"] is None
    assert Certificate.from_record(cert.to_record()) == cert


def test_tampered_certificate_fails():
    p = random_form(2, seed=5)
    pprime, cert = orbit_sample(p, seed=5)
    assert verify_certificate(cert)
    # zerowy wyznacznik w początku
    assert not verify_certificate(replace(cert, gauge=replace(cert.gauge, d=BiLaurent.zero())))
    # zmieniona postać docelowa
    other = CanonicalForm(2, pprime.p + BiLaurent.monomial(1, 1))
    assert not verify_certificate(replace(cert, pprime=other))


def test_fast_path_certificates_are_diagonal():
    p = random_form(2, seed=9)
    verdict = decide_iso(p, CanonicalForm(2, p.p.scale(2)))
    assert verdict.certificate.gauge == GaugeCandidate.diagonal(2, 1)


# =============================================================================
# TRANSPORT WZDŁUŻ PHI
# =============================================================================


def test_transport_up_and_down():
    p = random_form(2, seed=12)
    pprime, cert = orbit_sample(p, seed=12)
    lifted = transport_witness_up(cert)
    assert lifted is not None
    assert lifted.j == 3
    assert lifted.p == phi(p) and lifted.pprime == phi(pprime)
    assert verify_certificate(lifted)
    assert lifted.gauge.det_at_origin() == cert.gauge.det_at_origin()

    lowered = transport_witness_down(lifted)
    assert lowered is not None
    assert lowered.gauge == cert.gauge


def test_transport_up_requires_u_squared_in_c():
    p = random_form(2, seed=1)
    gauge = GaugeCandidate(BiLaurent.constant(1), BiLaurent.zero(), U, BiLaurent.constant(1))
    cert = Certificate(2, p, p, gauge)
    assert transport_witness_up(cert) is None


def test_transport_down_outside_image():
    p = random_form(3, seed=2)
    cert = Certificate(3, p, p, GaugeCandidate.identity())
    assert transport_witness_down(cert) is None


def test_welldef_through_phi():
    p = random_form(2, seed=21)
    pprime, _ = orbit_sample(p, seed=21)
    verdict = decide_iso(phi(p), phi(pprime))
    assert isinstance(verdict, CertifiedIso)


def test_injective_through_phi(hand_pair):
    p, zero = hand_pair
    assert isinstance(decide_iso(phi(p), phi(zero)), CertifiedNonIso)


# =============================================================================
# ROZSZCZEPIENIE I ORBITY
# =============================================================================


def test_phi_images_split_at_level_two():
    for seed in range(5):
        image = phi(random_form(2, seed))
        assert splits_at_level(image, 2)
        sample, _ = orbit_sample(image, seed)
        assert splits_at_level(sample, 2)


def test_linear_term_does_not_split_at_level_one(hand_pair):
    p, _ = hand_pair
    assert isinstance(decide_splitting(p, 1), CertifiedNonIso)
    assert not splits_at_level(p, 1)
    # na poziomie 0 wyraz u znika
    assert splits_at_level(p, 0)


def test_splitting_rejects_negative_level(hand_pair):
    with pytest.raises(ValueError):
        decide_splitting(hand_pair[0], -1)


def test_orbit_sample_identity_diagonal_returns_same_form():
    p = random_form(3, seed=7)
    pprime, cert = orbit_sample(p, seed=0, diagonal=(BiLaurent.constant(1), BiLaurent.constant(1)))
    assert pprime == p
    assert cert.gauge.b.is_zero()


def test_orbit_sample_is_deterministic():
    p = random_form(2, seed=8)
    assert orbit_sample(p, seed=1) == orbit_sample(p, seed=1)


def test_orbit_sample_rejects_singular_diagonal():
    p = random_form(2, seed=8)
    with pytest.raises(GaugeError):
        orbit_sample(p, seed=0, diagonal=(BiLaurent.zero(), BiLaurent.constant(1)))


def test_orbit_sample_failure_is_reported(monkeypatch):
    import iso_engine

    monkeypatch.setattr(iso_engine, "solve", lambda matrix, rhs: None)
    with pytest.raises(OrbitSampleError):
        orbit_sample(random_form(2, seed=1), seed=0)


@pytest.mark.parametrize("j", [2, 3])
def test_orbit_sample_at_minimal_window(j):
    minimal = TruncationParams(2 * j - 2, 2 * j + 1)
    assert minimal.for_level(j) == minimal
    for seed in range(3):
        p = random_form(j, seed)
        pprime, cert = orbit_sample(p, seed, minimal)
        assert cert.pprime == pprime
        assert cert.params == minimal
        assert verify_certificate(cert)


def test_orbit_b_window_covers_gauge_family():
    assert orbit_b_window(2) == (4, 7)
    assert orbit_b_window(3) == (6, 9)


def test_splitting_order_moves_up_by_two():
    checked = 0
    for seed in range(4):
        p = random_form(2, seed)
        for k in (0, 1):
            if splits_at_level(p, k):
                checked += 1
                assert splits_at_level(phi(p), k + 2)
    q = CanonicalForm(2, BiLaurent.monomial(2, 1))
    assert splits_at_level(q, 1)
    assert splits_at_level(phi(q), 3)
    assert checked >= 4


# =============================================================================
# PRZEGLĄDY NA WIĘKSZĄ SKALĘ
# =============================================================================


@pytest.mark.slow
@pytest.mark.parametrize("j", [2, 3])
@pytest.mark.parametrize("scale", [GaussianRational(2), GaussianRational(-1), GaussianRational(Fraction(1, 3))])
def test_scale_family_sweep(j, scale):
    for seed in range(100):
        p = random_form(j, seed)
        verdict = decide_iso(p, CanonicalForm(j, p.p.scale(scale)))
        assert isinstance(verdict, CertifiedIso)
        assert verify_certificate(verdict.certificate)
