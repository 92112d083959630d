"""Inner approximation solvers: hand-checked optima, orderings, containment."""

import numpy as np
import pytest

from flexsum import (TransformResult, battery_rhs, battery_to_hpolytope,
                     certificate_violation, contains_point, exact_sum,
                     sample_scenario, solve_decomposed, solve_general_affine,
                     solve_homothet_baseline, solve_structure_preserving,
                     support_point, volume_ratio)
from flexsum.polytope import build_base_set
from conftest import box_model, random_population_2d


def _boxes_instance():
    models = [box_model([0, 0], [1, 1]), box_model([0, 0], [2, 2])]
    return models, build_base_set(models)


def _rectangles_instance():
    models = [box_model([0, 0], [2, 1]), box_model([0, 0], [1, 2])]
    return models, build_base_set(models)


def test_identical_models_recover_population_scale():
    m = box_model([-1, 0, 0], [1, 2, 1])
    models = [m] * 4
    base = build_base_set(models)
    r = solve_structure_preserving(models, base)
    assert r.objective == pytest.approx(4.0, abs=1e-6)
    assert np.allclose(r.map, 4 * np.eye(3), atol=1e-6)
    # every per-set transform collapses to the identity at this optimum
    for p in r.per_set:
        assert np.allclose(p.Gamma, np.eye(3), atol=1e-5)
        assert np.allclose(p.gamma, 0.0, atol=1e-5)


def test_boxes_structure_preserving_exact():
    models, base = _boxes_instance()
    r = solve_structure_preserving(models, base)
    assert r.objective == pytest.approx(2.0, abs=1e-7)
    # inner set alpha * [0, 1.5]^2 + center = [0, 3]^2, the exact sum
    _, area = exact_sum([battery_to_hpolytope(m) for m in models])
    inner_area = abs(np.linalg.det(r.map)) * 1.5 ** 2
    assert inner_area == pytest.approx(area, rel=1e-6)


def test_rectangles_structure_preserving():
    models, base = _rectangles_instance()
    r = solve_structure_preserving(models, base)
    assert r.objective == pytest.approx(2.0, abs=1e-7)
    gammas = sorted(np.round(np.diag(p.Gamma), 6).tolist() for p in r.per_set)
    assert gammas == [[2 / 3, 4 / 3], [4 / 3, 2 / 3]]
    assert np.allclose(r.map, 2 * np.eye(2), atol=1e-6)


def test_general_affine_on_rectangles():
    models, base = _rectangles_instance()
    r = solve_general_affine(models, base)
    assert r.objective == pytest.approx(4.0, abs=1e-6)
    assert abs(np.linalg.det(r.map)) == pytest.approx(4.0, rel=1e-6)


def test_affine_dominates_homothet_feasibility():
    m = box_model([0, 0, 0], [1, 2, 3])
    models = [m] * 3
    base = build_base_set(models)
    r = solve_general_affine(models, base)
    assert r.objective >= 3 * 3 - 1e-6  # the identity-based stack is feasible


def test_decomposed_matches_affine():
    models, base = _rectangles_instance()
    ra = solve_general_affine(models, base)
    rd = solve_decomposed(models, base)
    assert rd.objective == pytest.approx(ra.objective, rel=1e-6)
    assert np.allclose(rd.map, np.diag([2.0, 2.0]), atol=1e-6)


def test_decomposed_single_model_identity():
    m = box_model([0, 0], [1, 2])
    base = build_base_set([m])
    r = solve_decomposed([m], base)
    assert r.objective == pytest.approx(2.0, abs=1e-7)


def test_homothet_boxes():
    models, base = _boxes_instance()
    r = solve_homothet_baseline(models, base)
    alphas = sorted(round(float(np.diag(p.Gamma)[0]), 9) for p in r.per_set)
    assert alphas == pytest.approx([2 / 3, 4 / 3], abs=1e-7)
    assert r.objective == pytest.approx(2.0, abs=1e-7)


def test_homothet_rectangles_conservative():
    models, base = _rectangles_instance()
    r = solve_homothet_baseline(models, base)
    assert r.objective == pytest.approx(4 / 3, abs=1e-7)
    inner_area = abs(np.linalg.det(r.map)) * 1.5 ** 2
    _, area = exact_sum([battery_to_hpolytope(m) for m in models])
    assert inner_area == pytest.approx(4.0, rel=1e-6)
    assert inner_area < area


def test_homothet_identical_models():
    m = box_model([0, 0], [2, 1])
    models = [m] * 5
    base = build_base_set(models)
    r = solve_homothet_baseline(models, base)
    assert r.objective == pytest.approx(5.0, abs=1e-6)


def test_homothet_flat_set_degrades_to_singleton():
    # second resource is flat in the y coordinate, so only a zero dilation fits
    models = [box_model([0, 0], [1, 1]),
              box_model([0, 0], [1, 1e-12])]
    base = build_base_set(models)
    r = solve_homothet_baseline(models, base)
    flat = min(r.per_set, key=lambda p: p.Gamma[0, 0])
    assert flat.Gamma[0, 0] == 0.0
    assert contains_point(battery_to_hpolytope(models[1]), flat.gamma, tol=1e-7)


def test_orderings_on_random_instances(rng):
    for _ in range(8):
        models, base = random_population_2d(rng, n=int(rng.integers(2, 5)))
        rs = solve_structure_preserving(models, base)
        ra = solve_general_affine(models, base)
        rh = solve_homothet_baseline(models, base)
        assert rh.objective <= rs.objective + 1e-6
        assert base.T * rs.objective <= ra.objective + 1e-6


def test_decomposition_equivalence_random(rng):
    for _ in range(6):
        models, base = random_population_2d(rng, n=int(rng.integers(2, 5)))
        ra = solve_general_affine(models, base)
        rd = solve_decomposed(models, base)
        assert rd.objective == pytest.approx(ra.objective, rel=1e-6, abs=1e-9)


def test_sums_and_certificates_consistent(rng):
    models, base = random_population_2d(rng, n=3)
    for solver in (solve_structure_preserving, solve_general_affine,
                   solve_decomposed, solve_homothet_baseline):
        r = solver(models, base)
        assert np.allclose(r.center, np.sum([p.gamma for p in r.per_set], axis=0),
                           atol=1e-12)
        assert np.allclose(r.map, np.sum([p.Gamma for p in r.per_set], axis=0),
                           atol=1e-12)
        for model, p in zip(models, r.per_set):
            v = certificate_violation(base.polytope, battery_to_hpolytope(model),
                                      p.gamma, p.Gamma, p.certificate)
            assert v <= 1e-6


def test_containment_of_mapped_base_points(rng):
    # the defining property: center + map @ u0 splits into per-set points that
    # are individually feasible and sum back up
    models, base = random_population_2d(rng, n=3)
    r = solve_general_affine(models, base)
    polys = [battery_to_hpolytope(m) for m in models]
    for _ in range(200):
        u0 = support_point(base.polytope, rng.normal(size=2))
        parts = [p.gamma + p.Gamma @ u0 for p in r.per_set]
        for poly, part in zip(polys, parts):
            assert contains_point(poly, part, tol=1e-6)
        assert np.allclose(np.sum(parts, axis=0), r.center + r.map @ u0, atol=1e-9)


def test_structure_inner_area_matches_oracle_on_boxes(rng):
    for _ in range(5):
        models, base = random_population_2d(rng, n=3, force_box=True)
        r = solve_structure_preserving(models, base)
        base_area = float(np.prod(base.h0[4:6] + base.h0[6:8]))
        _, oracle_area = exact_sum([battery_to_hpolytope(m) for m in models])
        assert abs(np.linalg.det(r.map)) * base_area == pytest.approx(oracle_area, rel=1e-6)


def test_result_json_round_trip(rng):
    models, base = random_population_2d(rng, n=2)
    r = solve_general_affine(models, base)
    data = r.to_dict(include_certificates=True)
    back = TransformResult.from_dict(data)
    assert np.allclose(back.map, r.map)
    assert np.allclose(back.center, r.center)
    assert back.method == r.method
    assert back.per_set[0].certificate is not None
    slim = TransformResult.from_dict(r.to_dict())
    assert slim.per_set[0].certificate is None
