import numpy as np
import pytest

from ctxrank import dcn
from ctxrank.errors import DataError
from ctxrank.features import AblationMask, FeatureSchema, Normalizer
from ctxrank.model_io import RankerModel, load_model, save_model


def make_model(seed=0):
    schema = FeatureSchema(context_attrs=("geo", "job_family"))
    params = dcn.init(schema.total_dim, 2, [8, 8], seed=seed)
    normalizer = Normalizer(
        mean=np.linspace(-1, 1, schema.total_dim),
        std=np.linspace(0.5, 2.0, schema.total_dim),
    )
    return RankerModel(
        schema=schema,
        normalizer=normalizer,
        params=params,
        mask=AblationMask(use_semantic_context=False),
        config_echo="loss=hinge\nseed=0\n",
    )


def test_round_trip(tmp_path):
    model = make_model()
    path = tmp_path / "model.ctxr"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.schema == model.schema
    assert loaded.mask == model.mask
    assert loaded.config_echo == model.config_echo
    assert np.array_equal(loaded.normalizer.mean, model.normalizer.mean)
    assert np.array_equal(loaded.normalizer.std, model.normalizer.std)
    for saved, orig in zip(loaded.params.as_list(), model.params.as_list()):
        # weights survive the f32 round trip exactly at f32 resolution
        assert np.array_equal(saved, orig.astype(np.float32).astype(np.float64))
    assert loaded.params.activation == "relu"


def test_save_is_deterministic(tmp_path):
    model = make_model(seed=3)
    p1, p2 = tmp_path / "a.ctxr", tmp_path / "b.ctxr"
    save_model(model, p1)
    save_model(model, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_model_scores_match_quantized(tmp_path):
    model = make_model(seed=1)
    path = tmp_path / "m.ctxr"
    save_model(model, path)
    loaded = load_model(path)
    x = np.linspace(-1, 1, model.schema.total_dim)
    s1, _ = dcn.forward(loaded.params, x)
    s2, _ = dcn.forward(loaded.params, x)
    assert s1 == s2


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ctxr"
    path.write_bytes(b"WHAT" + b"\x00" * 32)
    with pytest.raises(DataError, match="unrecognized format"):
        load_model(path)


def test_truncated(tmp_path):
    model = make_model()
    path = tmp_path / "m.ctxr"
    save_model(model, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(DataError):
        load_model(path)


def test_version_mismatch(tmp_path):
    model = make_model()
    path = tmp_path / "m.ctxr"
    save_model(model, path)
    data = bytearray(path.read_bytes())
    data[4] = 99
    path.write_bytes(bytes(data))
    with pytest.raises(DataError, match="version"):
        load_model(path)
