import warnings

import numpy as np
import pytest

from oracles import coarse_dense, operator_matrix, oracle_preconditioner
from schwarzdd.assembly import robin_local_builder
from schwarzdd.exceptions import ConfigurationError, DimensionError, SingularMatrixError
from schwarzdd.linalg import from_scipy
from schwarzdd.mesh import dual_graph, node_graph
from schwarzdd.partition import (extend_overlap_elements, extend_overlap_nodes,
                                 node_partition_from_elements, partition_geometric)
from schwarzdd.problems import poisson_problem, waveguide_problem
from schwarzdd.schwarz import (build_one_level, build_two_level, coarse_basis, combine,
                               local_dirichlet_matrices, schwarz_operator)


def element_decomp(p, px, py, k):
    return extend_overlap_elements(partition_geometric(p.mesh, px, py), dual_graph(p.mesh), k,
                                   p.dofmap, p.mesh)


def node_decomp(p, px, py, k):
    part = node_partition_from_elements(partition_geometric(p.mesh, px, py), p.dofmap)
    return extend_overlap_nodes(part, node_graph(p.A), k, p.dofmap.dof_coords, p.mesh.h)


def dense_oracle(p, d, variant, two_level=False, alpha=1.0, impedance=False):
    B = None
    if variant in ("OAS", "ORAS"):
        build = robin_local_builder(p.spec, alpha, impedance)
        B = [build(d.local_mesh(i)).to_dense() for i in range(d.n_subdomains)]
    return oracle_preconditioner(p.A.to_dense(), d.dofs, d.interface, d.owner, d.multiplicity,
                                 variant, p.dirichlet_dofs, B, two_level)


def build(p, d, variant, alpha=1.0, impedance=False, **kw):
    builder = robin_local_builder(p.spec, alpha, impedance) if variant in ("OAS", "ORAS") else None
    return build_one_level(p.A, d, variant, builder, p.dirichlet_dofs, **kw)


def test_local_matrices_single_subdomain():
    p = poisson_problem(4)
    d = element_decomp(p, 1, 1, 0)
    (A1,) = local_dirichlet_matrices(p.A, d, p.dirichlet_dofs)
    free = np.setdiff1d(np.arange(p.n_dofs), p.dirichlet_dofs)
    assert np.array_equal(A1.to_dense(), p.A.to_dense()[np.ix_(free, free)])


def test_local_matrices_strip_example():
    # 4x1 mesh, no Dirichlet sides: subdomain 0 grows to cells 0-2; interface is {3, 8}
    p = poisson_problem(4, 1, 4.0, 1.0, dirichlet=())
    d = element_decomp(p, 2, 1, 1)
    assert d.interface[0].tolist() == []
    p = poisson_problem(4, 2, 4.0, 2.0, dirichlet=("left",))
    d = element_decomp(p, 2, 1, 1)
    A0 = local_dirichlet_matrices(p.A, d, p.dirichlet_dofs)[0].to_dense()
    # V_0 minus the Dirichlet column x = 0 and the interface vertex 8
    inner = [1, 2, 3, 6, 7, 11, 12, 13]
    assert d.interface[0].tolist() == [8]
    assert np.array_equal(A0, p.A.to_dense()[np.ix_(inner, inner)])
    assert np.linalg.eigvalsh(A0).min() > 0


def test_local_matrices_swallowed_subdomain():
    p = poisson_problem(3, 3)
    d = element_decomp(p, 3, 3, 0)
    with pytest.raises(ConfigurationError):
        local_dirichlet_matrices(p.A, d, p.dirichlet_dofs)


def test_cross_points_need_more_overlap():
    p = poisson_problem(8)
    with pytest.raises(ConfigurationError, match="interior to no"):
        build(p, element_decomp(p, 2, 2, 1), "RAS")
    build(p, element_decomp(p, 2, 2, 2), "RAS")
    build(p, node_decomp(p, 2, 2, 1), "RAS")


def test_oras_warns_on_uncovered_cross_points():
    p = poisson_problem(8)
    with pytest.warns(RuntimeWarning, match="interface of every subdomain"):
        build(p, element_decomp(p, 2, 2, 0), "ORAS")
    # k = 0 leaves the whole cut on both interfaces
    with pytest.warns(RuntimeWarning):
        build(p, element_decomp(p, 2, 1, 0), "ORAS")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        build(p, element_decomp(p, 2, 1, 1), "ORAS")


def test_single_subdomain_is_exact():
    p = poisson_problem(5, dirichlet=("left",))
    d = element_decomp(p, 1, 1, 0)
    r = np.random.default_rng(0).standard_normal(p.n_dofs)
    x = np.linalg.solve(p.A.to_dense(), r)
    for v in ("AS", "RAS", "SAS", "OAS", "ORAS"):
        assert np.allclose(build(p, d, v).apply(r), x, atol=1e-12)


def test_ras_identity_matrix_partition_of_unity():
    p = poisson_problem(4, 1, 4.0, 1.0, dirichlet=())
    A = from_scipy(np.eye(p.n_dofs))
    for k in (0, 1, 2):
        d = element_decomp(p, 2, 1, k)
        M = build_one_level(A, d, "RAS")
        r = np.arange(1.0, p.n_dofs + 1)
        assert np.array_equal(M.apply(r), r)


def test_apply_linear_and_checks_size(rng):
    p = waveguide_problem(h=0.25)
    d = element_decomp(p, 1, 3, 1)
    M = build(p, d, "ORAS")
    r1 = rng.standard_normal(p.n_dofs) + 1j * rng.standard_normal(p.n_dofs)
    r2 = rng.standard_normal(p.n_dofs)
    a, b = 0.3 - 2j, 1.7
    lhs = M.apply(a * r1 + b * r2)
    assert np.linalg.norm(lhs - (a * M.apply(r1) + b * M.apply(r2))) <= 1e-14 * np.linalg.norm(lhs) * 10
    with pytest.raises(DimensionError):
        M.apply(np.ones(p.n_dofs + 1))


@pytest.mark.parametrize("variant", ["AS", "RAS", "SAS"])
@pytest.mark.parametrize("mode,px,py,k", [("element", 2, 1, 1), ("element", 1, 3, 2),
                                           ("element", 2, 2, 2), ("node", 2, 2, 1)])
def test_dirichlet_path_matches_dense_oracle(variant, mode, px, py, k):
    p = poisson_problem(6, 5, dirichlet=("left", "bottom"))
    d = (element_decomp if mode == "element" else node_decomp)(p, px, py, k)
    M = build(p, d, variant)
    dense = operator_matrix(M.apply, p.n_dofs)
    ref = dense_oracle(p, d, variant)
    assert np.linalg.norm(dense - ref) <= 1e-12 * np.linalg.norm(ref)


@pytest.mark.parametrize("variant", ["OAS", "ORAS"])
@pytest.mark.parametrize("px,py,k", [(2, 1, 0), (2, 1, 1), (1, 3, 2), (2, 2, 2)])
@pytest.mark.filterwarnings("ignore:.*interface of every subdomain")
def test_robin_path_matches_dense_oracle(variant, px, py, k):
    p = waveguide_problem(h=0.4)
    d = element_decomp(p, px, py, k)
    M = build(p, d, variant, impedance=True)
    dense = operator_matrix(M.apply, p.n_dofs, complex)
    ref = dense_oracle(p, d, variant, impedance=True)
    assert np.linalg.norm(dense - ref) <= 1e-12 * np.linalg.norm(ref)


def test_oras_multiplicity_scaling():
    p = poisson_problem(6, 4, dirichlet=("left",))
    d = element_decomp(p, 2, 1, 1)
    M = build(p, d, "ORAS", oras_scaling="multiplicity")
    w = np.concatenate([loc.weights for loc in M.locals])
    assert set(np.round(w, 12)) <= {1.0, 0.5}


def test_as_symmetric_positive_definite():
    p = poisson_problem(6, 6)
    M = build(p, node_decomp(p, 2, 2, 1), "AS")
    dense = operator_matrix(M.apply, p.n_dofs)
    assert np.abs(dense - dense.T).max() <= 1e-12 * np.abs(dense).max()
    assert np.linalg.eigvalsh((dense + dense.T) / 2).min() > 0


def test_ras_and_oras_unsymmetric():
    p = poisson_problem(6, 4, dirichlet=("left",))
    d = element_decomp(p, 2, 1, 1)
    for v in ("RAS", "ORAS"):
        dense = operator_matrix(build(p, d, v).apply, p.n_dofs)
        assert np.abs(dense - dense.T).max() > 1e-10


def test_singular_local_matrix_reports_subdomain():
    p = poisson_problem(4, 1, 4.0, 1.0, dirichlet=())
    d = node_decomp(p, 2, 1, 1)
    diag = np.ones(p.n_dofs)
    diag[4] = 0.0  # corner (4, 0) lies in subdomain 1 only
    with pytest.raises(SingularMatrixError) as info:
        build_one_level(from_scipy(np.diag(diag)), d, "AS")
    assert info.value.subdomain == 1


def test_two_level_matches_dense_oracle():
    p = poisson_problem(6, 6, dirichlet=("left",))
    d = node_decomp(p, 2, 2, 1)
    M2 = build_two_level(build(p, d, "RAS"), p.A)
    assert M2.levels == 2 and M2.coarse.size == 4
    dense = operator_matrix(M2.apply, p.n_dofs)
    ref = dense_oracle(p, d, "RAS", two_level=True)
    assert np.linalg.norm(dense - ref) <= 1e-12 * np.linalg.norm(ref)


def test_coarse_basis_structure():
    p = poisson_problem(6, 4, dirichlet=("left",))
    d = element_decomp(p, 2, 1, 1)
    Phi = coarse_basis(d).toarray()
    assert set(np.unique(Phi)) == {0.0, 1.0}
    assert np.all(Phi.sum(axis=1) == 1)
    for i in range(2):
        assert Phi[:, i].sum() == np.sum(d.owner == i)
    M2 = build_two_level(build(p, d, "AS"), p.A)
    _, A0 = coarse_dense(p.A.to_dense(), d.owner, 2)
    assert np.allclose(M2.coarse.matrix, A0, atol=1e-14)


def test_coarse_basis_skips_subdomain_owning_nothing():
    from schwarzdd.partition import partition_graph_greedy
    p = poisson_problem(3, 3, dirichlet=("left",))
    # seeded greedy parts [0 0 0 2 3 1 2 3 1]: every vertex of part 3 touches a lower part
    part = partition_graph_greedy(dual_graph(p.mesh), 4, seed=80)
    d = extend_overlap_elements(part, dual_graph(p.mesh), 1, p.dofmap, p.mesh)
    assert np.bincount(d.owner, minlength=4)[3] == 0
    assert coarse_basis(d).shape == (16, 3)
    with pytest.raises(ConfigurationError):
        node_partition_from_elements(part, p.dofmap)
    M2 = build_two_level(build(p, d, "OAS"), p.A)
    dense = operator_matrix(M2.apply, p.n_dofs)
    ref = dense_oracle(p, d, "OAS", two_level=True)
    assert np.linalg.norm(dense - ref) <= 1e-12 * np.linalg.norm(ref)


def test_two_level_single_subdomain():
    p = poisson_problem(4)
    M2 = build_two_level(build(p, element_decomp(p, 1, 1, 0), "AS"), p.A)
    assert M2.coarse.size == 1 and M2.coarse.matrix[0, 0] > 0


def test_schwarz_operator_examples(rng):
    p = poisson_problem(4)
    M = build(p, element_decomp(p, 1, 1, 0), "AS")
    Q = schwarz_operator(M, p.A)
    assert np.all(Q.matvec(np.zeros(p.n_dofs)) == 0)
    x = rng.standard_normal(p.n_dofs)
    assert np.allclose(Q.matvec(x), x, atol=1e-12)
    y = rng.standard_normal(p.n_dofs)
    assert np.allclose(Q.matvec(2 * x - y), 2 * Q.matvec(x) - Q.matvec(y), atol=1e-12)


def test_combine_examples():
    from scipy.sparse.linalg import aslinearoperator
    P1 = aslinearoperator(np.diag([1.0, 0.0]))
    P2 = aslinearoperator(np.diag([0.0, 1.0]))
    I = aslinearoperator(np.eye(2))
    assert combine([P1, P2], "additive").matvec(np.ones(2)).tolist() == [1.0, 1.0]
    x = np.array([3.0, -2.0])
    for mode in ("additive", "multiplicative"):
        assert np.array_equal(combine([P1], mode).matvec(x), P1.matvec(x))
    assert np.array_equal(combine([P1, I, P2], "multiplicative").matvec(x), x)
    with pytest.raises(ConfigurationError):
        combine([P1], "hybrid")


def test_threads_bitwise_identical(rng):
    p = waveguide_problem(h=0.2)
    d = element_decomp(p, 1, 4, 1)
    r = rng.standard_normal(p.n_dofs)
    z1 = build(p, d, "ORAS", impedance=True).apply(r)
    z4 = build(p, d, "ORAS", impedance=True, threads=4).apply(r)
    assert np.array_equal(z1, z4)


def test_setup_report(tmp_path):
    p = poisson_problem(6)
    M = build_two_level(build(p, node_decomp(p, 2, 1, 1), "RAS"), p.A)
    rows = M.report_rows()
    assert [r["subdomain"] for r in rows] == [0, 1, "coarse"]
    M.write_report(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().startswith("subdomain,local_dofs,interface_dofs")
