import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aese.hilbert import (
    HilbertError,
    QuantumState,
    annihilation,
    build_space,
    clock_projector_collective,
    collective_cz_operators,
    collective_pauli_z,
    creation,
    hermitian_deviation,
    identity,
    ion_projector,
    leakage,
    number,
    product_state,
    qubit_sector_projectors,
    sigma_z,
    zeeman_projector_collective,
)


def test_dimension_and_ordering():
    space = build_space((2, 2), (5, 3))
    assert space.dimension == 60
    assert space.spin_dimension == 4 and space.motional_dimension == 15
    # first-declared subsystem is fastest
    assert space.index((1, 0, 0, 0)) == 1
    assert space.index((0, 1, 0, 0)) == 2
    assert space.index((0, 0, 1, 0)) == 4
    assert space.labels(space.index((1, 1, 4, 2))) == (1, 1, 4, 2)


@pytest.mark.parametrize("levels,trunc", [((4, 2), (3,)), ((2, 2), (0,)), ((), (3,))])
def test_invalid_spaces(levels, trunc):
    with pytest.raises(HilbertError):
        build_space(levels, trunc)


def test_ladder_algebra():
    space = build_space((2, 2), (6,))
    a = annihilation(space, 0).dense()
    ad = creation(space, 0).dense()
    n = number(space, 0).dense()
    assert np.allclose(ad @ a, n)
    comm = a @ ad - ad @ a
    # [a, a^dag] = 1 except in the top truncated level
    diag = np.real(np.diag(comm)).reshape(6, 4)  # (motion, spin) in C order
    assert np.allclose(diag[:-1], 1.0)
    assert np.allclose(diag[-1], -5.0)


def test_mode_index_out_of_range():
    space = build_space((2, 2), (4,))
    with pytest.raises(HilbertError):
        annihilation(space, 1)


def test_pauli_and_projectors():
    space = build_space((2, 2), (2,))
    sz1 = sigma_z(space, 0).dense()
    p0 = ion_projector(space, 0, 0).dense()
    p1 = ion_projector(space, 0, 1).dense()
    assert np.allclose(sz1, p0 - p1)
    cz = collective_pauli_z(space, (1, -1)).dense()
    assert np.allclose(cz, sz1 - sigma_z(space, 1).dense())
    assert hermitian_deviation(cz) == 0.0


def test_three_level_operators():
    space = build_space((3, 3), (3,))
    pz = zeeman_projector_collective(space)
    pc = clock_projector_collective(space)
    sx, sy, sz = collective_cz_operators(space)
    for op in (pz, pc, sx, sy, sz):
        assert op.hermitian
        assert hermitian_deviation(op.matrix) < 1e-15
    # sx, sy, sz act within {|1c>, |1z>}: they commute with the |0> projectors
    p0 = ion_projector(space, 0, 0)
    assert sx.commutator(p0).max_abs() == 0.0
    with pytest.raises(HilbertError):
        zeeman_projector_collective(build_space((2, 2), (3,)))


def test_sector_masks_partition_space():
    space = build_space((3, 2), (4,))
    masks = qubit_sector_projectors(space)
    total = np.zeros(space.dimension, dtype=int)
    for _, m in masks:
        total += m
    assert np.all(total == 1)
    assert [b for b, _ in masks] == [(0, 0), (1, 0), (0, 1), (1, 1)]


def test_product_state_and_leakage():
    space = build_space((2, 2), (5, 4))
    spin = np.zeros(4)
    spin[3] = 1.0
    psi = product_state(space, spin, (4, 0))
    assert psi.norm == pytest.approx(1.0)
    assert space.labels(int(np.argmax(np.abs(psi.amplitudes)))) == (1, 1, 4, 0)
    assert leakage(psi, top_k=2) == pytest.approx(1.0)
    assert leakage(product_state(space, spin, (0, 0)), top_k=2) == 0.0
    with pytest.raises(HilbertError):
        product_state(space, spin, (0,))


def test_state_shape_checked():
    space = build_space((2, 2), (3,))
    with pytest.raises(HilbertError):
        QuantumState(space, np.zeros(5))


def test_identity_and_arithmetic():
    space = build_space((2, 2), (3,))
    eye = identity(space)
    n = number(space, 0)
    assert np.allclose((eye @ n).dense(), n.dense())
    assert np.allclose((n + n - n * 2.0).dense(), 0)


@settings(max_examples=25, deadline=None)
@given(
    levels=st.tuples(st.sampled_from([2, 3]), st.sampled_from([2, 3])),
    trunc=st.lists(st.integers(2, 5), min_size=1, max_size=2),
    data=st.data(),
)
def test_index_roundtrip(levels, trunc, data):
    space = build_space(levels, trunc)
    i = data.draw(st.integers(0, space.dimension - 1))
    assert space.index(space.labels(i)) == i
    vec = np.arange(space.dimension, dtype=complex)
    assert np.array_equal(space.from_tensor(space.as_tensor(vec)), vec)
