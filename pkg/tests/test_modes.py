import json

import numpy as np
import pytest

import modeshape as ms
from modeshape.errors import ValidationError
from modeshape.modes import TWO_PI
from modeshape.reference import THREE_ION_FREQS_MHZ, three_ion_chain_dict


def test_load_reference_document(chain):
    spec = ms.load_mode_spec(three_ion_chain_dict())
    assert np.allclose(spec.omega / (TWO_PI * 1e6), THREE_ION_FREQS_MHZ)
    assert np.allclose(spec.eta[2], [-0.0457, -0.0776, 0.0625])
    assert spec.n_ions == spec.n_modes == 3
    assert np.all(spec.delta == 0.0)


def test_load_from_file(tmp_path):
    path = tmp_path / "modes.json"
    path.write_text(json.dumps(three_ion_chain_dict()))
    spec = ms.load_mode_spec(path)
    assert spec.n_modes == 3


def test_non_increasing_frequencies_rejected():
    doc = three_ion_chain_dict()
    doc["frequencies_mhz"] = [3.0, 2.9, 3.1]
    with pytest.raises(ValidationError, match="non-increasing"):
        ms.load_mode_spec(doc)


def test_eta_shape_mismatch_rejected():
    doc = three_ion_chain_dict()
    doc["eta"] = doc["eta"][:2]
    with pytest.raises(ValidationError, match="eta"):
        ms.load_mode_spec(doc)


def test_missing_field_named():
    doc = three_ion_chain_dict()
    del doc["frequencies_mhz"]
    with pytest.raises(ValidationError, match="frequencies_mhz"):
        ms.load_mode_spec(doc)


def test_lamb_dicke_bound():
    doc = three_ion_chain_dict()
    doc["eta"][0][0] = 1.5
    with pytest.raises(ValidationError, match="Lamb-Dicke"):
        ms.load_mode_spec(doc)


def test_round_trip(chain):
    doc = ms.mode_spec_to_dict(chain)
    again = ms.load_mode_spec(doc)
    assert np.array_equal(again.omega, chain.omega)
    assert np.array_equal(again.eta, chain.eta)


def test_save_round_trip(tmp_path, chain):
    path = tmp_path / "spec.json"
    ms.save_mode_spec(chain, path)
    again = ms.load_mode_spec(path)
    assert np.allclose(again.omega, chain.omega, rtol=1e-15)


def test_synthesize_chain_matches_reference(chain):
    spacings = TWO_PI * 1e3 * np.array([96.8, 68.0])
    spec = ms.synthesize_chain(spacings, chain.omega[0])
    assert np.allclose(spec.omega, chain.omega, rtol=1e-12)


def test_synthesize_chain_seven_modes():
    spacings = TWO_PI * 1e3 * np.asarray(ms.CHAIN_SPACINGS_KHZ[7])
    spec = ms.synthesize_chain(spacings, TWO_PI * 2.9574e6)
    assert spec.n_modes == 7
    assert np.all(np.diff(spec.omega) > 0)


def test_synthesize_chain_degenerate():
    w0 = TWO_PI * 3e6
    spec = ms.synthesize_chain([], w0)
    assert spec.n_modes == 1
    assert spec.omega[0] == w0


def test_synthesize_chain_rejects_nonpositive_spacing():
    with pytest.raises(ValidationError, match="positive"):
        ms.synthesize_chain([-1.0], TWO_PI * 3e6)


def test_synthesized_eta_refused_by_coupling_check():
    spec = ms.synthesize_chain([TWO_PI * 50e3], TWO_PI * 3e6)
    with pytest.raises(ValidationError, match="zero"):
        spec.coupled_ion_row(0)


def test_chain_reconstruction_roundtrip(chain):
    spec = ms.synthesize_chain(np.diff(chain.omega), chain.omega[0])
    assert np.allclose(spec.omega, chain.omega, rtol=1e-12)


def test_uniform_detuning(chain):
    d = TWO_PI * 100.0
    spec = ms.with_detuning(chain, d)
    assert np.allclose(spec.delta, d)
    assert np.array_equal(spec.omega, chain.omega)
    assert np.allclose(spec.detuned_omega, chain.omega + d)


def test_per_mode_detuning(chain):
    spec = ms.with_detuning(chain, [0.0, 0.0, TWO_PI * 50.0])
    assert spec.delta[2] == pytest.approx(TWO_PI * 50.0)
    assert spec.delta[0] == 0.0


def test_detuning_composes_additively(chain):
    a, b = TWO_PI * 30.0, TWO_PI * 45.0
    spec = ms.with_detuning(ms.with_detuning(chain, a), b)
    assert np.allclose(spec.delta, a + b)


def test_detuning_length_mismatch(chain):
    with pytest.raises(ValidationError, match="delta"):
        ms.with_detuning(chain, [0.0, 1.0])


def test_large_detuning_warns(chain):
    with pytest.warns(UserWarning, match="10%"):
        ms.with_detuning(chain, 0.2 * chain.min_spacing)


def test_spec_is_immutable(chain):
    with pytest.raises(Exception):
        chain.omega[0] = 1.0
