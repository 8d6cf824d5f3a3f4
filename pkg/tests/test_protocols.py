import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eyeglass_synth.errors import EmptyProtocolError, InsufficientDataWarning, InvalidArgument
from eyeglass_synth.manifest import GLASS, NO_GLASS, Manifest, ManifestRecord
from eyeglass_synth.protocols import (DISJOINT, PROTOCOLS, build_split, evaluate,
                                      genuine_impostor, rank1, read_roc, roc_export, roc_points,
                                      score_matrix, valid_pairs, verification_rates)

from oracles import rank1_oracle, threshold_sweep

PER_PERSON = {"I": ((2, 0), (2, 0)), "II": ((0, 2), (0, 2)),
              "III": ((2, 0), (0, 2)), "IV": ((2, 2), (2, 2))}


def eval_manifest(n_ids, g=2, ng=2):
    recs = []
    for i in range(n_ids):
        recs += [ManifestRecord(f"p{i:05d}/ng{k}.ppm", f"p{i:05d}", NO_GLASS) for k in range(ng)]
        recs += [ManifestRecord(f"p{i:05d}/g{k}.ppm", f"p{i:05d}", GLASS) for k in range(g)]
    return Manifest(recs)


def one_hot(manifest):
    ids = sorted(manifest.identities())
    col = {v: k for k, v in enumerate(ids)}
    E = np.zeros((len(manifest), len(ids)))
    for r, rec in enumerate(manifest):
        E[r, col[rec.identity]] = 1.0
    return E


def counts(entries, manifest):
    out = {}
    for e in entries:
        key = (e.identity, manifest[e.ref].is_glass)
        out[key] = out.get(key, 0) + 1
    return out


# -- splits ----------------------------------------------------------------

def test_protocol_iv_at_test_set_scale():
    m = eval_manifest(1710)
    split = build_split(m, "IV", seed=0)
    assert len(split.gallery) == len(split.probe) == 6840
    assert len({e.ref for e in split.gallery} | {e.ref for e in split.probe}) == 6840
    assert not split.excluded


@pytest.mark.parametrize("proto", ["I", "II", "III", "IV"])
def test_per_person_counts(proto):
    m = eval_manifest(40)
    split = build_split(m, proto, seed=3)
    (g_ng, g_g), (p_ng, p_g) = PER_PERSON[proto]
    gc, pc = counts(split.gallery, m), counts(split.probe, m)
    for ident in m.identities():
        assert gc.get((ident, False), 0) == g_ng and gc.get((ident, True), 0) == g_g
        assert pc.get((ident, False), 0) == p_ng and pc.get((ident, True), 0) == p_g


def test_protocol_iii_small_example():
    m = eval_manifest(3)
    split = build_split(m, "III", seed=1)
    assert len(split.gallery) == 6 and all(not m[e.ref].is_glass for e in split.gallery)
    assert len(split.probe) == 6 and all(m[e.ref].is_glass for e in split.probe)


def test_empty_protocol():
    m = Manifest([ManifestRecord(f"a{k}", "a", GLASS) for k in range(4)])
    with pytest.raises(EmptyProtocolError):
        build_split(m, "I", seed=0)


def test_ineligible_identities_excluded():
    m = Manifest(list(eval_manifest(3).records) +
                 [ManifestRecord("lonely/ng0", "lonely", NO_GLASS),
                  ManifestRecord("lonely/g0", "lonely", GLASS)])
    split = build_split(m, "IV", seed=0)
    assert split.excluded == ("lonely",)
    assert all(e.identity != "lonely" for e in split.gallery + split.probe)


def test_disjoint_mode_needs_and_separates():
    with pytest.raises(EmptyProtocolError):
        build_split(eval_manifest(5), "IV", seed=0, mode=DISJOINT)
    m = eval_manifest(5, g=4, ng=4)
    for proto in PROTOCOLS:
        split = build_split(m, proto, seed=2, mode=DISJOINT)
        assert not {e.ref for e in split.gallery} & {e.ref for e in split.probe}
        assert valid_pairs(split).all()


def test_split_deterministic():
    m = eval_manifest(20, g=3, ng=3)
    a, b = build_split(m, "IV", seed=5), build_split(m, "IV", seed=5)
    assert a == b
    assert build_split(m, "IV", seed=6) != a


def test_unknown_protocol_and_mode():
    with pytest.raises(InvalidArgument):
        build_split(eval_manifest(2), "V", seed=0)
    with pytest.raises(InvalidArgument):
        build_split(eval_manifest(2), "I", seed=0, mode="mixed")


# -- scores ------------------------------------------------------------------

def test_score_matrix_examples():
    m = eval_manifest(4)
    split = build_split(m, "IV", seed=0)
    S = score_matrix(split.gallery, split.gallery, one_hot(m))
    np.testing.assert_allclose(np.diag(S), 1.0, atol=1e-15)
    same = np.array([[a.identity == b.identity for b in split.gallery] for a in split.gallery])
    np.testing.assert_array_equal(S, same.astype(float))


def test_score_matrix_matches_pairwise_oracle():
    m = eval_manifest(6)
    E = np.random.default_rng(0).normal(size=(len(m), 16))
    split = build_split(m, "IV", seed=0)
    S = score_matrix(split.gallery, split.probe, E)
    for i, p in enumerate(split.probe):
        for j, g in enumerate(split.gallery):
            a, b = E[p.ref], E[g.ref]
            assert abs(S[i, j] - a @ b / np.sqrt((a @ a) * (b @ b))) < 1e-12


def test_missing_embedding_names_image():
    m = eval_manifest(2)
    split = build_split(m, "I", seed=0)
    with pytest.raises(LookupError, match=split.gallery[0].path):
        score_matrix(split.gallery, split.probe, {})


# -- verification ------------------------------------------------------------

def test_perfect_separation():
    res = verification_rates([1.0] * 50, [-1.0] * 10**6, (1e-4, 1e-5, 1e-6))
    assert res.tpr == [1.0, 1.0, 1.0]


def test_insufficient_data_warning():
    with pytest.warns(InsufficientDataWarning):
        res = verification_rates([0.9, 0.8], np.linspace(-1, 0, 10), (1e-4,))
    assert res.warnings and res.saturated == [True]


def test_agrees_with_threshold_sweep_oracle():
    rng = np.random.default_rng(1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientDataWarning)
        for trial in range(20):
            gen = np.round(rng.normal(0.5, 0.2, 2000), 3)     # rounding forces ties
            imp = np.round(rng.normal(0.0, 0.2, 8000), 3)
            fars = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
            res = verification_rates(gen, imp, fars)
            for far, tpr, t in zip(fars, res.tpr, res.thresholds):
                assert (tpr, t) == threshold_sweep(gen, imp, far)


def test_identical_distributions_track_far():
    rng = np.random.default_rng(2)
    scores = rng.normal(size=1000)
    for far in (0.5, 0.1, 0.01):
        res = verification_rates(scores, scores, (far,))
        assert res.tpr[0] <= far and far - res.tpr[0] <= 1 / 1000 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 400), st.integers(1, 400))
def test_tpr_monotone_in_far(seed, n_gen, n_imp):
    rng = np.random.default_rng(seed)
    gen, imp = rng.normal(0.3, 1, n_gen), rng.normal(0, 1, n_imp)
    fars = sorted(rng.uniform(1e-6, 0.999, 8), reverse=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InsufficientDataWarning)
        tpr = verification_rates(gen, imp, fars).tpr
    assert all(a >= b for a, b in zip(tpr, tpr[1:]))
    assert all(0 <= v <= 1 for v in tpr)


def test_verification_input_errors():
    with pytest.raises(InvalidArgument):
        verification_rates([], [0.1])
    with pytest.raises(InvalidArgument):
        verification_rates([0.2], [0.1], (1.0,))


# -- rank-1 ------------------------------------------------------------------

def test_rank1_examples():
    ids = ["a", "b", "c"]
    assert rank1(np.eye(3), ids, ids) == 1.0
    assert rank1(np.roll(np.eye(3), 1, axis=1), ids, ids) == 0.0
    # tie between a wrong and a right column goes to the lower index
    assert rank1([[0.5, 0.5]], ["b"], ["a", "b"]) == 0.0


def test_rank1_matches_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        S = np.round(rng.uniform(-1, 1, (50, 100)), 2)
        probe_ids = list(rng.integers(0, 10, 50))
        gallery_ids = list(rng.integers(0, 10, 100))
        assert rank1(S, probe_ids, gallery_ids) == rank1_oracle(S, probe_ids, gallery_ids)


# -- ROC ---------------------------------------------------------------------

def test_roc_perfect_separation_contains_corner(tmp_path):
    pts = roc_export([0.9, 0.8, 0.95], [-0.2, 0.1, 0.1], tmp_path / "roc.csv")
    assert (0.0, 1.0) in pts
    back = read_roc(tmp_path / "roc.csv")
    assert back == pts
    assert len(back) == len({-0.2, 0.1}) + 2


def test_roc_monotone_and_dkw():
    rng = np.random.default_rng(4)
    m = 2000
    gen, imp = rng.normal(size=m), rng.normal(size=m)
    pts = roc_points(gen, imp)
    fars = [p[0] for p in pts]
    tprs = [p[1] for p in pts]
    assert fars == sorted(fars) and tprs == sorted(tprs)
    assert max(abs(f - t) for f, t in pts) < 2 / np.sqrt(m)


# -- end to end --------------------------------------------------------------

@pytest.mark.parametrize("proto", ["I", "II", "III", "IV"])
def test_one_hot_embeddings_are_perfect(proto):
    m = eval_manifest(30)
    report = evaluate(m, one_hot(m), proto, seed=0)
    assert report.rank1 == 1.0
    assert all(v == 1.0 for v in report.tpr.values())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_metrics_invariant_to_embedding_scale(seed):
    rng = np.random.default_rng(seed)
    m = eval_manifest(12)
    E = rng.normal(size=(len(m), 8))
    scaled = E * rng.uniform(0.01, 100, size=(len(m), 1))
    a = evaluate(m, E, "IV", seed=1)
    b = evaluate(m, scaled, "IV", seed=1)
    assert a.rank1 == b.rank1 and a.n_impostor == b.n_impostor
    for far in a.tpr:
        assert a.tpr[far] == b.tpr[far]


def test_self_matches_not_scored():
    m = eval_manifest(10)
    split = build_split(m, "IV", seed=0)
    gen, imp = genuine_impostor(score_matrix(split.gallery, split.probe, one_hot(m)), split)
    # 4 probes x 3 other same-person gallery images per identity
    assert len(gen) == 10 * 4 * 3
    assert len(imp) == 40 * 36


def test_report_text_and_json():
    m = eval_manifest(10)
    r = evaluate(m, one_hot(m), "III", seed=0)
    lines = r.format().splitlines()
    assert lines[0] == "protocol: III" and lines[2].startswith("TPR@FAR=0.0001: ")
    assert '"protocol": "III"' in r.to_json()
