import numpy as np
import pytest

from entbound import bounds, spin
from entbound.bounds import (
    MASK_F_FLOOR,
    MASK_MISSING,
    MASK_NEGATIVE_S,
    MASK_OK,
    BoundMap,
    boson_bound,
    boson_bound_map,
    boson_bound_raw,
    product_witness_expectation,
    spin_bound,
    spin_bound_map,
    spin_bound_raw,
    spin_bound_values,
)
from entbound.errors import InputError, NumericError, ValidationError
from entbound.io import TofImage
from entbound.lattice import LatticeSpec, build_lattice, q_grid
from entbound.tof import TofCalibration, envelope_values


def chain(n):
    return build_lattice(LatticeSpec(kind="chain", dims=(n,)))


def natural_calib(**kw):
    base = dict(units="natural", mass=1.0, flight_time=1.0,
                wannier_width=0.15, far_field=False)
    base.update(kw)
    return TofCalibration(**base)


def test_spin_bound_anchor_points():
    assert spin_bound_raw(2.0) == 0.0
    assert spin_bound(2.0) == 0.0
    assert spin_bound(0.0) == 1.0
    assert spin_bound(1.0) == 0.5
    assert spin_bound(6.0) == 0.0          # raw -2 clamps to zero
    assert spin_bound_raw(6.0) == -2.0


def test_spin_bound_rejects_garbage():
    with pytest.raises(ValidationError):
        spin_bound(np.nan)
    with pytest.raises(ValidationError):
        spin_bound(-1.0)
    # tiny numerical negatives are tolerated and treated as zero
    assert spin_bound(-1e-12) == pytest.approx(1.0)


def test_spin_bound_values_masks():
    S = np.array([0.0, 4.0, -0.5, np.nan])
    raw, E, mask = spin_bound_values(S)
    assert list(mask) == [MASK_OK, MASK_OK, MASK_NEGATIVE_S, MASK_MISSING]
    assert E[0] == 1.0
    assert E[1] == 0.0
    assert raw[1] == -1.0
    assert np.isnan(raw[2]) and np.isnan(E[3])


def test_spin_bound_values_flags_pass_through():
    S = np.array([1.0, 1.0])
    _, _, mask = spin_bound_values(S, flags=[MASK_OK, MASK_MISSING])
    assert list(mask) == [MASK_OK, MASK_MISSING]


def test_spin_bound_map_from_structure_factor():
    lat = chain(2)
    corr = spin.correlators(spin.ground_state(spin.build_heisenberg(lat, 1.0)))
    sf = spin.structure_factor_grid(corr, lat, q_grid(lat, 5))
    bmap = spin_bound_map(sf, comments=("run",))
    assert bmap.kind == "spin"
    assert bmap.coord_names == ("qx",)
    assert np.all(bmap.ok)
    at_zero = np.searchsorted(bmap.coords[:, 0], 0.0)
    assert bmap.E[at_zero] == pytest.approx(1.0, abs=1e-12)
    assert bmap.comments == ("run",)


def test_bound_map_validates_mask_codes():
    with pytest.raises(ValidationError):
        BoundMap(kind="spin", coord_names=("qx",), coords=np.zeros((1, 1)),
                 columns={"S": np.ones(1)}, raw=np.zeros(1), E=np.zeros(1),
                 mask=np.array(["bogus"], dtype=object))


def test_bound_map_column_order():
    bmap = BoundMap(kind="spin", coord_names=("qx",), coords=np.zeros((1, 1)),
                    columns={"S": np.ones(1)}, raw=np.zeros(1), E=np.zeros(1),
                    mask=np.array([MASK_OK], dtype=object))
    assert bmap.column_names() == ("qx", "S", "raw", "E", "mask")
    assert not bmap.all_masked


def test_boson_bound_anchor_points():
    assert boson_bound_raw(2.0, 1.0, 4.0) == 2.0
    assert boson_bound(2.0, 1.0, 4.0) == 2.0
    assert boson_bound(8.0, 1.0, 4.0) == 0.0      # raw negative clamps
    with pytest.raises(ValidationError):
        boson_bound(1.0, 0.0, 4.0)                # envelope floor
    with pytest.raises(ValidationError):
        boson_bound(-1.0, 1.0, 4.0)               # real negative density


def test_boson_bound_tolerates_interference_noise():
    # destructive-interference pixels can go epsilon-negative in float math
    assert boson_bound(-1e-16, 1.0, 4.0) == 4.0


def make_image(values, axes, mean_n, k_space=False):
    return TofImage(x_axis=axes, y_axis=axes,
                    values=np.asarray(values, dtype=float),
                    k_space=k_space, mean_atom_number=mean_n)


def test_boson_bound_map_mott_zero():
    lat = chain(4)
    calib = natural_calib(lattice=lat.spec, mean_atom_number=4.0)
    axes = np.linspace(-np.pi, np.pi, 5)
    gx, gy = np.meshgrid(axes, axes, indexing="ij")
    f = envelope_values(gx.reshape(-1), gy.reshape(-1), calib).reshape(5, 5)
    bmap = boson_bound_map(make_image(f * 4.0, axes, 4.0), calib)
    assert np.all(bmap.ok)
    assert np.all(bmap.E == 0.0)
    assert np.all(bmap.raw == 0.0)


def test_boson_bound_map_f_floor_masks_wings():
    lat = chain(2)
    calib = natural_calib(wannier_width=1.2, lattice=lat.spec, mean_atom_number=2.0)
    axes = np.linspace(-3.0, 3.0, 7)
    vals = np.ones((7, 7))
    bmap = boson_bound_map(make_image(vals, axes, 2.0), calib, f_floor=0.5)
    assert np.any(bmap.mask == MASK_F_FLOOR)
    assert np.any(bmap.mask == MASK_OK)
    # the surviving pixels sit where the envelope is above half its max
    f = envelope_values(bmap.coords[:, 0], bmap.coords[:, 1], calib)
    assert np.all(f[bmap.ok] > 0.5 * f.max())


def test_boson_bound_map_f_floor_one_masks_everything():
    lat = chain(2)
    calib = natural_calib(lattice=lat.spec, mean_atom_number=2.0)
    axes = np.linspace(-1.0, 1.0, 3)
    bmap = boson_bound_map(make_image(np.ones((3, 3)), axes, 2.0), calib, f_floor=1.0)
    assert bmap.all_masked
    assert set(bmap.mask) == {MASK_F_FLOOR}


def test_boson_bound_map_masks_nonfinite_and_negative():
    lat = chain(2)
    calib = natural_calib(lattice=lat.spec, mean_atom_number=2.0)
    axes = np.array([-0.5, 0.5])
    vals = np.array([[np.nan, 1.0], [-0.5, 1.0]])
    bmap = boson_bound_map(make_image(vals, axes, 2.0), calib)
    assert list(bmap.mask) == [MASK_MISSING, MASK_OK, MASK_MISSING, MASK_OK]


def test_boson_bound_map_k_space_coords_convert():
    lat = chain(2)
    calib = natural_calib(mass=2.0, flight_time=1.0, lattice=lat.spec,
                          mean_atom_number=1.0)         # momentum scale 2
    axes = np.array([-2.0, 2.0])
    bmap = boson_bound_map(make_image(np.ones((2, 2)), axes, 1.0, k_space=True), calib)
    assert np.allclose(np.unique(bmap.coords[:, 0]), [-1.0, 1.0])


def test_boson_bound_map_needs_mean_number():
    lat = chain(2)
    calib = natural_calib(lattice=lat.spec)
    axes = np.array([0.0, 1.0])
    with pytest.raises(InputError):
        boson_bound_map(make_image(np.ones((2, 2)), axes, None), calib)


def test_boson_bound_map_mean_number_fallback_to_calibration():
    lat = chain(2)
    calib = natural_calib(lattice=lat.spec, mean_atom_number=3.0)
    axes = np.array([0.0, 1.0])
    bmap = boson_bound_map(make_image(np.zeros((2, 2)), axes, None), calib)
    assert np.all(bmap.raw[bmap.ok] == 3.0)


def test_boson_bound_map_needs_some_lattice():
    calib = natural_calib(mean_atom_number=1.0)
    axes = np.array([0.0, 1.0])
    with pytest.raises(InputError):
        boson_bound_map(make_image(np.ones((2, 2)), axes, 1.0), calib)


def test_product_witness_nonnegative_on_aligned_state():
    lat = chain(2)
    up = np.zeros((3, 2))
    up[2, :] = 1.0                       # both spins along +z
    at_pi = product_witness_expectation(np.array([np.pi]), up, lat)
    at_zero = product_witness_expectation(np.array([0.0]), up, lat)
    assert at_pi == pytest.approx(0.0, abs=1e-12)
    assert at_zero == pytest.approx(1.0, abs=1e-12)


def test_product_witness_mixed_state_value():
    # fully mixed sites: sum_alpha (1 - 0) = 3 per site -> 3/2 - 1 = 1/2 at any q
    lat = chain(3)
    bloch = np.zeros((3, 3))
    val = product_witness_expectation(np.array([1.234]), bloch, lat)
    assert val == pytest.approx(0.5, abs=1e-12)


def test_product_witness_rejects_superunit_bloch():
    lat = chain(2)
    bad = np.zeros((3, 2))
    bad[0, 0] = 1.5
    with pytest.raises(ValidationError):
        product_witness_expectation(np.array([0.0]), bad, lat)


def test_product_witness_matches_direct_structure_factor():
    # dual-path identity: witness from Bloch vectors == S(q)/2 - 1 from the
    # explicit product density matrix
    from entbound.oracle import sample_product_spin_state
    lat = chain(4)
    state, bloch = sample_product_spin_state(4, "mixed", (99, 0))
    corr = spin.correlators(state)
    for qval in (0.0, 0.7, np.pi):
        S = spin.structure_factor(corr, lat, np.array([qval]))
        direct = S / 2.0 - 1.0
        decomposed = product_witness_expectation(np.array([qval]), bloch, lat)
        assert decomposed == pytest.approx(direct, abs=1e-9)
