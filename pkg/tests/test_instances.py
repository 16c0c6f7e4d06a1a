import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from uncert.algebra import BlockAlgebra, check_positive_unital, check_tracial, is_phi_density
from uncert.errors import ConfigError, SchemaError
from uncert.instances import (
    Instance,
    InstanceSpec,
    _splitmix64,
    generate_instance,
    make_rng,
    mix_seed,
    random_density,
    random_ginibre,
    random_hermitian,
    random_phi_density,
    random_psd,
    random_tracial_map,
    random_unitary,
)
from uncert.linalg import is_hermitian, lambda_min, opnorm


def test_splitmix_reference_value():
    # first output of SplitMix64 seeded with 0 (published reference stream)
    assert _splitmix64(0) == 0xE220A8397B1DCDAF


def test_mix_seed_is_stable_and_spreads():
    assert mix_seed(7, 0) == mix_seed(7, 0)
    seeds = {mix_seed(7, t) for t in range(10000)}
    assert len(seeds) == 10000
    assert all(0 <= s < 2**64 for s in seeds)
    assert mix_seed(7, 3) != mix_seed(8, 3)


def test_make_rng_uses_philox():
    assert isinstance(make_rng(3).bit_generator, np.random.Philox)
    g = np.random.default_rng(0)
    assert make_rng(g) is g


def test_random_hermitian_examples():
    one = random_hermitian(1, 0)
    assert one.shape == (1, 1) and one[0, 0].imag == 0
    assert np.array_equal(random_hermitian(4, 11), random_hermitian(4, 11))
    assert is_hermitian(random_hermitian(5, 3))


def test_random_hermitian_diagonal_mean():
    rng = make_rng(1)
    diag = [random_hermitian(3, rng)[0, 0].real for _ in range(10000)]
    assert abs(np.mean(diag)) < 0.05


def test_ginibre_normalisation():
    g = random_ginibre(200, 5)
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, abs=0.02)
    with pytest.raises(ValueError):
        random_ginibre(0, 1)


def test_random_density_examples():
    assert np.allclose(random_density(1, 0), [[1.0]])
    rng = make_rng(2)
    for _ in range(1000):
        rho = random_density(3, rng)
        assert abs(np.trace(rho).real - 1) <= 1e-12
        assert lambda_min(rho) >= -1e-14


def test_random_psd_shift():
    p = random_psd(4, 0, shift=0.5)
    assert lambda_min(p) >= 0.5 - 1e-12


def test_random_unitary_examples():
    u = random_unitary(1, 3)
    assert abs(abs(u[0, 0]) - 1) < 1e-14
    for n in (2, 5):
        u = random_unitary(n, n)
        assert opnorm(u.conj().T @ u - np.eye(n)) <= 1e-10
    assert np.array_equal(random_unitary(3, 9), random_unitary(3, 9))


@given(st.sampled_from([(1,), (2,), (2, 3), (1, 2, 2)]),
       st.sampled_from(["usual-trace", "scaled-block-trace", "center-expectation", "composite"]),
       st.integers(1, 3), st.integers(0, 2**63))
def test_random_maps_pass_checkers(dims, kind, k, seed):
    alg = BlockAlgebra(dims)
    phi = random_tracial_map(alg, kind, k, seed)
    assert check_tracial(phi, 3, 0) <= 1e-10
    ok, defect = check_positive_unital(phi, 3, 0)
    assert ok
    if kind != "usual-trace":
        assert defect <= 1e-10
    rho = random_phi_density(phi, seed)
    assert is_phi_density(phi, rho)


def test_single_block_scaled_trace_is_scaled_trace():
    phi = random_tracial_map(BlockAlgebra((3,)), "scaled-block-trace", 1, 0)
    assert phi.coeffs.shape == (1, 1)
    assert phi.coeffs[0, 0] == pytest.approx(1 / 3)


def test_random_map_rejects_bad_kind():
    with pytest.raises(ConfigError):
        random_tracial_map(BlockAlgebra((2,)), "nope")
    with pytest.raises(ConfigError):
        random_tracial_map(BlockAlgebra((2,)), "composite", 0)


def test_spec_validation():
    with pytest.raises(ConfigError):
        InstanceSpec(trials=0)
    with pytest.raises(ConfigError):
        InstanceSpec(block_dims=(0,))
    with pytest.raises(ConfigError):
        InstanceSpec(map_kind="bogus")
    with pytest.raises(ConfigError):
        InstanceSpec(alpha_grid=(1.5,))
    with pytest.raises(ConfigError):
        InstanceSpec(seed=-1)
    with pytest.raises(ConfigError):
        InstanceSpec.from_json({"map_kind": "composite"})


def test_spec_json_round_trip():
    spec = InstanceSpec(block_dims=(2, 3), map_kind="composite", k=3, seed=99, trials=5, codomain_dims=(1, 2))
    assert InstanceSpec.from_json(json.loads(json.dumps(spec.to_json()))) == spec


def test_generate_instance_is_pure_function_of_spec_and_trial():
    spec = InstanceSpec(block_dims=(2, 3), map_kind="composite", k=2, seed=7)
    a, b = generate_instance(spec, 13), generate_instance(spec, 13)
    for f in ("rho", "a", "b", "c", "pos_a", "pos_b"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    assert a.seed == mix_seed(7, 13)
    # independent of which other trials ran before
    generate_instance(spec, 12)
    assert np.array_equal(generate_instance(spec, 13).rho, a.rho)
    assert not np.array_equal(generate_instance(spec, 14).rho, a.rho)


def test_instance_fields_have_required_properties():
    inst = generate_instance(InstanceSpec(block_dims=(2, 2), map_kind="scaled-block-trace", k=2), 3)
    assert is_hermitian(inst.a) and is_hermitian(inst.b)
    assert lambda_min(inst.pos_a) > 0 and lambda_min(inst.pos_b) > 0
    assert is_phi_density(inst.phi, inst.rho)
    assert inst.alpha in inst_grid() and inst.beta in inst_grid()


def inst_grid():
    return InstanceSpec().alpha_grid


def test_instance_json_round_trip_is_exact():
    inst = generate_instance(InstanceSpec(block_dims=(2, 3), map_kind="composite", k=3, seed=1), 4)
    back = Instance.from_json(json.loads(json.dumps(inst.to_json())))
    for f in ("rho", "a", "b", "c", "pos_a", "pos_b"):
        assert np.array_equal(getattr(back, f), getattr(inst, f))
    x = inst.pos_a
    assert np.array_equal(back.phi(x), inst.phi(x))
    assert (back.alpha, back.beta, back.seed, back.trial) == (inst.alpha, inst.beta, inst.seed, inst.trial)


def test_instance_schema_errors():
    with pytest.raises(SchemaError):
        Instance.from_json({"schema": "something/else"})
    d = generate_instance(InstanceSpec(), 0).to_json()
    del d["rho"]
    with pytest.raises(SchemaError):
        Instance.from_json(d)
    d = generate_instance(InstanceSpec(), 0).to_json()
    d["a"]["blocks"][0]["re"] = [[1.0]]
    with pytest.raises(SchemaError):
        Instance.from_json(d)


def test_unseeded_generators_work():
    assert random_hermitian(3).shape == (3, 3)
    assert isinstance(make_rng(None).bit_generator, np.random.Philox)
