import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import f2_oracle as fo
from conftest import PR_FREE_ION, random_c2_field
from hyperspec.angular import TermLabel
from hyperspec.electronic import (
    CrystalFieldParams,
    FreeIonParams,
    SymmetryError,
    build_electronic_hamiltonian,
    build_f2_basis,
    coulomb_energy,
    diagonalize_electronic,
    tensor_operator,
)


@pytest.fixture(scope="module")
def product_map():
    return fo.coupled_states(build_f2_basis())


def test_basis_size_and_orthonormal_embedding(product_map):
    assert len(build_f2_basis()) == 91
    assert np.abs(product_map.T @ product_map - np.eye(91)).max() < 1e-12


@pytest.mark.parametrize("k", [2, 4, 6])
def test_unit_tensor_matches_product_space(product_map, k):
    for q in range(-k, k + 1):
        ref = fo.project(fo.operator("U", k, q), product_map)
        assert np.abs(tensor_operator("U", k, q) - ref).max() < 1e-12


@pytest.mark.parametrize("kind", ["L", "S", "N"])
def test_vector_operators_match_product_space(product_map, kind):
    for q in (-1, 0, 1):
        ref = fo.project(fo.operator(kind, 1, q), product_map)
        assert np.abs(tensor_operator(kind, 1, q) - ref).max() < 1e-12


def test_free_ion_matches_product_space(product_map):
    fi = FreeIonParams(PR_FREE_ION.F2, PR_FREE_ION.F4, PR_FREE_ION.F6, PR_FREE_ION.zeta)
    ref = fo.project(fo.coulomb({2: fi.F2, 4: fi.F4, 6: fi.F6}) + fi.zeta * fo.spin_orbit(),
                     product_map)
    H = build_electronic_hamiltonian(fi, None)
    assert np.abs(H - ref).max() < 1e-9


# Closed forms in the scaled integrals F2 = F^2/225, F4 = F^4/1089, F6 = 25 F^6/184041.
CONDON_SHORTLEY = {
    "3H": (-25, -51, -13),
    "3F": (-10, -33, -286),
    "3P": (45, 33, -1287),
    "1I": (25, 9, 1),
    "1G": (-30, 97, 78),
    "1D": (19, -99, 715),
    "1S": (60, 198, 1716),
}


@pytest.mark.parametrize("term", sorted(CONDON_SHORTLEY))
def test_coulomb_closed_forms(term):
    fi = FreeIonParams(68955.0, 50505.0, 33098.0, 0.0)
    f = (fi.F2 / 225, fi.F4 / 1089, 25 * fi.F6 / 184041)
    expected = sum(c * x for c, x in zip(CONDON_SHORTLEY[term], f))
    assert coulomb_energy(TermLabel.parse(term), fi) == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_hermitian_and_basis_order_independent(synthetic_cf):
    a = build_electronic_hamiltonian(PR_FREE_ION, synthetic_cf, order="LSJM")
    b = build_electronic_hamiltonian(PR_FREE_ION, synthetic_cf, order="MJSL")
    assert np.abs(a - a.conj().T).max() < 1e-9
    ea = np.linalg.eigvalsh(a)
    eb = np.linalg.eigvalsh(b)
    assert np.abs(ea - eb).max() < 1e-8


def test_zero_cf_gives_2j_plus_1_degeneracies():
    levels = diagonalize_electronic(build_electronic_hamiltonian(PR_FREE_ION, None))
    sizes = sorted(len(g) for g in levels.degenerate_groups)
    # one group per J multiplet with J > 0; 3P0 and 1S0 stay singlets
    assert sum(sizes) + 2 == 91
    assert levels.multiplet[0] == TermLabel.parse("3H4")
    assert len(levels.levels_of("3H4")) == 9


def test_ground_multiplet_is_3h4(synthetic_levels):
    assert synthetic_levels.multiplet[0] == TermLabel.parse("3H4")
    assert synthetic_levels.energies[0] == 0.0
    assert len(synthetic_levels.levels_of("1D2")) == 5


def test_c2_rejects_odd_q():
    with pytest.raises(SymmetryError):
        CrystalFieldParams({(2, 1): 10.0}, "C2")
    with pytest.raises(SymmetryError):
        CrystalFieldParams({(2, 2): 10 + 1j}, "D2")
    with pytest.raises(SymmetryError):
        CrystalFieldParams({(2, 2): 1.0, (2, -2): 5.0}, "C2")
    with pytest.raises(ValueError):
        CrystalFieldParams({(3, 0): 1.0})


def test_non_hermitian_rejected():
    H = np.zeros((91, 91), complex)
    H[0, 1] = 1.0
    with pytest.raises(ValueError):
        diagonalize_electronic(H)


def test_free_ion_validation():
    with pytest.raises(ValueError):
        FreeIonParams(1.0, 1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        FreeIonParams(1.0, 1.0, 1.0, 1.0, configuration="f3")
    with pytest.warns(UserWarning):
        FreeIonParams(1.0, 2.0, 1.0, 1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.2, 3.0))
def test_cf_scaling_keeps_trace(seed, factor):
    # rank-k tensors are traceless, so the CF never moves the centroid
    cf = random_c2_field(np.random.default_rng(seed))
    h0 = build_electronic_hamiltonian(PR_FREE_ION, None)
    h1 = build_electronic_hamiltonian(PR_FREE_ION, cf.scaled(factor))
    assert np.trace(h1).real == pytest.approx(np.trace(h0).real, rel=1e-12)
