import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from gemsmooth.dynamics import (
    A,
    B,
    C,
    analytic_triangle_jacobian,
    equilateral_mesh_jacobian,
    hex_patch,
    mesh_map,
    mesh_spectrum,
    numerical_jacobian,
    orbit_tangent,
    random_simple_mesh,
    random_triangle,
    relative_equilibrium_factor,
    shape_spectrum,
    similarity_distance,
    simple6_jacobian,
    spectrum,
    spectrum_survey,
    triangle_map,
)
from gemsmooth.errors import BadValence, IncompatibleMeshes, MapUndefined, NotEquilateral
from gemsmooth.mesh import build_mesh, gen_grid_mesh, gen_simple_mesh
from gemsmooth.smoother import apply_operator

S3 = np.sqrt(3.0)
EQ_CW = np.array([[0.0, 0.0], [0.5, S3 / 2], [1.0, 0.0]])
EQ_CCW = EQ_CW[[0, 2, 1]]


def match_error(a, b):
    cost = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def block(m, k, l):
    return m[2 * k : 2 * k + 2, 2 * l : 2 * l + 2]


def random_similarity(rng):
    ang = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    return rng.uniform(0.5, 2.0) * rot, rng.uniform(-3, 3, 2)


class TestNumericalJacobian:
    def test_identity(self):
        x = np.random.default_rng(0).standard_normal(7)
        assert np.abs(numerical_jacobian(lambda v: v, x) - np.eye(7)).max() < 1e-12

    def test_linear_map(self):
        m = np.random.default_rng(1).standard_normal((4, 5))
        assert np.abs(numerical_jacobian(lambda v: m @ v, np.ones(5)) - m).max() < 1e-9

    def test_triangle_clockwise_matches_analytic(self):
        jac = numerical_jacobian(triangle_map, EQ_CW, step=1e-6)
        assert np.abs(jac - analytic_triangle_jacobian()).max() < 1e-8

    def test_triangle_counter_clockwise_is_reflected(self):
        jac = numerical_jacobian(triangle_map, EQ_CCW, step=1e-6)
        assert np.abs(jac - analytic_triangle_jacobian("ccw")).max() < 1e-8
        # the displayed blocks do not fit this labelling
        assert np.abs(jac - analytic_triangle_jacobian("cw")).max() > 0.1

    def test_simple6_matches_corrected(self):
        m = gen_simple_mesh(7)
        jac = numerical_jacobian(mesh_map(m), m)
        assert np.abs(jac - simple6_jacobian()).max() < 1e-8

    def test_undefined(self):
        with pytest.raises(MapUndefined):
            numerical_jacobian(triangle_map, [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])

    def test_step_scales_with_size(self):
        big = EQ_CW * 1e4
        jac = numerical_jacobian(triangle_map, big)
        assert np.abs(jac - analytic_triangle_jacobian()).max() < 1e-6


class TestTriangleJacobian:
    def test_blocks(self):
        np.testing.assert_allclose(A + B + C, np.eye(2), atol=1e-16)
        j = analytic_triangle_jacobian()
        for k in range(3):
            np.testing.assert_array_equal(block(j, k, k), A)
            np.testing.assert_array_equal(block(j, k, (k + 1) % 3), B)
            np.testing.assert_array_equal(block(j, k, (k + 2) % 3), C)

    def test_block_circulant(self):
        j = analytic_triangle_jacobian()
        np.testing.assert_array_equal(np.roll(j[:2], 2, axis=1), j[2:4])

    def test_spectrum(self):
        rep = spectrum(analytic_triangle_jacobian())
        np.testing.assert_allclose(rep.moduli, [1, 1, 1, 1, 0.5, 0.5], atol=1e-10)
        assert sorted(np.angle(rep.eigenvalues[4:])) == pytest.approx([-np.pi / 3, np.pi / 3], abs=1e-9)
        assert rep.unit_count == 4 and rep.classification == "attractor_orbit"

    def test_orientations_share_spectrum(self):
        a = spectrum(analytic_triangle_jacobian("cw")).eigenvalues
        b = spectrum(analytic_triangle_jacobian("ccw")).eigenvalues
        assert match_error(a, b) < 1e-12


class TestSimple6Jacobian:
    def test_corrected_spectrum(self):
        rep = spectrum(simple6_jacobian())
        assert rep.unit_count == 4
        rest = rep.eigenvalues[4:]
        assert np.all(np.abs(rest.imag) > 1e-6)
        assert match_error(rest, rest.conj()) < 1e-12
        assert rep.moduli[4:].max() == pytest.approx(0.8780, abs=5e-4)
        assert rep.moduli[4:].min() == pytest.approx(0.5774, abs=5e-4)

    def test_cw_frame_has_a_at_11(self):
        np.testing.assert_array_equal(block(simple6_jacobian("cw"), 1, 1), A)
        np.testing.assert_array_equal(block(simple6_jacobian("ccw"), 1, 1), A.T)

    def test_literal_pattern(self):
        lit = simple6_jacobian("cw", "literal")
        np.testing.assert_array_equal(block(lit, 1, 1), A)
        np.testing.assert_array_equal(block(lit, 0, 3), (B + C).T / 6)
        np.testing.assert_array_equal(block(lit, 5, 1), B.T / 2)
        np.testing.assert_array_equal(block(lit, 4, 1), np.zeros((2, 2)))
        # as displayed, the pattern is not a contraction off the orbit
        assert spectrum(lit).moduli.max() > 1.0

    def test_reflection_consistency(self):
        # same labels, mirrored coordinates: every cell is now clockwise
        m = gen_simple_mesh(7)
        jac = numerical_jacobian(mesh_map(m), m.vertices * [1, -1])
        assert np.abs(jac - simple6_jacobian("cw")).max() < 1e-8


class TestEquilateralMeshJacobian:
    def test_simple6_cross_check(self):
        np.testing.assert_allclose(
            equilateral_mesh_jacobian(gen_simple_mesh(7)), simple6_jacobian(), atol=1e-15
        )

    @pytest.mark.parametrize("rings", [2, 3])
    def test_hex_patch_numeric(self, rings):
        m = hex_patch(rings)
        jac = equilateral_mesh_jacobian(m)
        assert np.abs(jac - numerical_jacobian(mesh_map(m), m)).max() < 1e-8

    def test_two_ring_patch_spectrum(self):
        m = hex_patch(2)
        assert m.n_vertices == 19
        rep = spectrum(equilateral_mesh_jacobian(m))
        assert rep.unit_count == 4
        assert rep.max_non_unit_modulus < 1
        assert rep.classification == "attractor_orbit"

    def test_zero_blocks(self):
        m = hex_patch(2)
        jac = equilateral_mesh_jacobian(m)
        adj = {(int(a), int(b)) for c in m.cells for a in c for b in c}
        for k in range(m.n_vertices):
            for l in range(m.n_vertices):
                if (k, l) not in adj:
                    assert not block(jac, k, l).any()

    def test_literal_table_differs_from_derivative(self):
        m = hex_patch(2)
        lit = equilateral_mesh_jacobian(m, orientation="cw", variant="literal")
        assert np.abs(lit - equilateral_mesh_jacobian(m, orientation="cw")).max() > 0.1

    def test_not_equilateral(self):
        with pytest.raises(NotEquilateral):
            equilateral_mesh_jacobian(gen_grid_mesh(3))

    def test_bad_valence(self):
        # an inner vertex needs exactly six equilateral cells around it
        strip = build_mesh(
            [[0, 0], [1, 0], [0.5, S3 / 2], [1.5, S3 / 2]],
            [[0, 1, 2], [1, 3, 2]],
            boundary_mask=[True, False, True, True],
        )
        with pytest.raises(BadValence):
            equilateral_mesh_jacobian(strip)


class TestSpectrumReport:
    def test_diag(self):
        rep = spectrum(np.diag([2.0, 0.5]))
        np.testing.assert_allclose(rep.eigenvalues, [2.0, 0.5])
        assert rep.classification == "saddle"

    def test_inconclusive(self):
        assert spectrum(np.diag([1.0, 1.0, 0.3])).classification == "inconclusive"

    def test_orbit_basis_split(self):
        m = gen_simple_mesh(7)
        rep = spectrum(simple6_jacobian(), orbit_basis=orbit_tangent(m))
        np.testing.assert_allclose(rep.orbit_eigenvalues, 1.0, atol=1e-12)
        assert np.abs(rep.transverse_eigenvalues).max() == pytest.approx(0.87797, abs=1e-5)
        assert rep.classification == "attractor_orbit"

    def test_non_invariant_basis(self):
        with pytest.raises(ValueError):
            spectrum(np.diag([1.0, 2.0]), orbit_basis=[[1.0], [1.0]])

    def test_sorted_descending(self):
        rep = spectrum(np.random.default_rng(0).standard_normal((12, 12)))
        assert np.all(np.diff(rep.moduli) <= 1e-15)

    def test_too_large(self):
        with pytest.raises(ValueError):
            spectrum(np.zeros((4097, 4097)))


class TestSimpleMeshes:
    @pytest.mark.parametrize("N", range(4, 14))
    def test_relative_equilibrium(self, N):
        s, d = relative_equilibrium_factor(gen_simple_mesh(N))
        assert d < 1e-14
        assert abs(s.imag) < 1e-14
        assert (abs(s - 1) < 1e-14) == (N == 7)

    def test_n4_saddle(self):
        assert mesh_spectrum(gen_simple_mesh(4)).classification == "saddle"

    @pytest.mark.parametrize("N", range(5, 14))
    def test_attractor(self, N):
        rep = mesh_spectrum(gen_simple_mesh(N))
        assert rep.classification == "attractor_orbit"
        # translations are the only exactly neutral directions away from N = 7
        assert rep.unit_count == (4 if N == 7 else 2)

    def test_shape_spectrum_agrees_at_fixed_point(self):
        m = gen_simple_mesh(7)
        a = np.abs(mesh_spectrum(m).transverse_eigenvalues)
        b = np.abs(shape_spectrum(m).transverse_eigenvalues)
        assert a.max() == pytest.approx(b.max(), abs=1e-6)

    def test_shape_spectrum_large_fans(self):
        # once the drift in scale is factored out, large fans expand in shape
        assert shape_spectrum(gen_simple_mesh(12)).classification == "saddle"
        assert shape_spectrum(gen_simple_mesh(6)).classification == "attractor_orbit"


class TestSimilarityDistance:
    def test_orbit_member(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.standard_normal((9, 2))
            mat, t = random_similarity(rng)
            od = similarity_distance(a, a @ mat.T + t)
            assert od.d <= 1e-10
            np.testing.assert_allclose(od.apply(a), a @ mat.T + t, atol=1e-12)
            assert od.scale == pytest.approx(abs(np.linalg.det(mat)) ** 0.5, rel=1e-12)

    def test_reflection_positive_matches_grid_search(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((8, 2))
        b = a * [1, -1]
        od = similarity_distance(a, b)
        assert od.d > 0.1
        ac, bc = a - a.mean(0), b - b.mean(0)
        ua, ub = ac / np.linalg.norm(ac), bc / np.linalg.norm(bc)
        best = np.inf
        for th in np.linspace(0, 2 * np.pi, 20001):
            rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
            ra = ua @ rot.T
            s = max(0.0, float((ra * ub).sum()))
            best = min(best, np.linalg.norm(s * ra - ub))
        assert od.d == pytest.approx(best, abs=1e-7)

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c = rng.standard_normal((3, 6, 2))
            dab = similarity_distance(a, b).d
            assert dab == pytest.approx(similarity_distance(b, a).d, abs=1e-12)
            assert similarity_distance(a, c).d <= dab + similarity_distance(b, c).d + 1e-10

    def test_incompatible(self):
        with pytest.raises(IncompatibleMeshes):
            similarity_distance(gen_simple_mesh(6), gen_simple_mesh(7))
        with pytest.raises(IncompatibleMeshes):
            similarity_distance(np.zeros((3, 3)), np.zeros((3, 3)))
        grid = gen_grid_mesh(2)
        other = build_mesh(grid.vertices, grid.cells[:, [1, 2, 0]])
        with pytest.raises(IncompatibleMeshes):
            similarity_distance(grid, other)

    def test_perturbed_hexagon_distance_decreases(self):
        m = gen_simple_mesh(7)
        rng = np.random.default_rng(3)
        x = m.vertices + 1e-3 * rng.standard_normal(m.vertices.shape)
        ds = []
        for _ in range(15):
            ds.append(similarity_distance(x, m.vertices).d)
            x = apply_operator(x, m.cells)
        assert np.all(np.diff(ds[1:]) < 0)


class TestConjugacy:
    def test_spectra_invariant_under_similarity(self):
        rng = np.random.default_rng(4)
        for seed in range(5):
            m = gen_grid_mesh(3, 0.25, seed)
            mat, t = random_similarity(rng)
            g = build_mesh(m.vertices @ mat.T + t, m.cells)
            a = spectrum(numerical_jacobian(mesh_map(m), m)).eigenvalues
            b = spectrum(numerical_jacobian(mesh_map(g), g)).eigenvalues
            assert match_error(a, b) < 1e-7


class TestSurvey:
    def test_empty(self):
        res = spectrum_survey(lambda rng: random_triangle(rng), 0)
        assert res.rows == [] and res.skipped == 0

    def test_random_triangles_have_two_unit_eigenvalues(self):
        res = spectrum_survey(lambda rng: random_triangle(rng, 0.3), 700, seed=1)
        assert len(res.rows) == 700
        assert all(r.quality >= 0.3 for r in res.rows)
        assert all(r.unit_count == 2 for r in res.rows)
        assert all(r.spectral_norm <= r.frobenius_norm + 1e-12 for r in res.rows)

    def test_deterministic(self):
        a = spectrum_survey(random_simple_mesh(6), 5, seed=3)
        b = spectrum_survey(random_simple_mesh(6), 5, seed=3)
        assert [r.moduli.tolist() for r in a.rows] == [r.moduli.tolist() for r in b.rows]

    @pytest.mark.parametrize("N", range(5, 12))
    def test_regular_simple_meshes(self, N):
        m = gen_simple_mesh(N)
        res = spectrum_survey(lambda rng: m, 1)
        row = res.rows[0]
        assert np.all(row.moduli[np.abs(row.moduli - 1) >= 1e-6] < 1)

    def test_skips_undefined(self):
        bad = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        res = spectrum_survey(lambda rng: bad, 3)
        assert res.skipped == 3 and res.rows == []
