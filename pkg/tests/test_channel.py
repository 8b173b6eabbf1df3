import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikeris.channel import (
    ChannelBatch,
    ChannelRealization,
    GeometryConfig,
    SystemGeometry,
    build_features,
    build_q,
    feature_length,
    make_rng,
    normalize_features,
    path_loss_linear,
    sample_channels,
    sample_dataset,
    sample_geometry,
)


@pytest.mark.parametrize("d, expected", [(1.0, 1.0), (10.0, 10**-2.04), (100.0, 10**-4.08)])
def test_path_loss_examples(d, expected):
    assert path_loss_linear(d) == pytest.approx(expected, rel=1e-12)


def test_path_loss_values_quoted():
    assert path_loss_linear(10.0) == pytest.approx(9.120e-3, rel=1e-3)
    assert path_loss_linear(100.0) == pytest.approx(8.318e-5, rel=1e-3)


def test_path_loss_rejects_below_reference():
    with pytest.raises(ValueError):
        path_loss_linear(0.5)
    with pytest.raises(ValueError):
        path_loss_linear(np.array([2.0, 0.0]))


@given(st.floats(1.0, 1e3), st.floats(1.0, 1e3))
def test_path_loss_monotone(a, b):
    lo, hi = sorted((a, b))
    assert path_loss_linear(hi) <= path_loss_linear(lo)


@pytest.mark.parametrize(
    "d0, d1, bu, ru",
    [(0.0, 1.0, 1.0, 8.0), (6.0, 4.0, np.sqrt(52), np.sqrt(28))],
)
def test_geometry_examples(d0, d1, bu, ru):
    g = SystemGeometry(8.0, d0, d1)
    assert g.d_bu == pytest.approx(bu, rel=1e-12)
    assert g.d_ru == pytest.approx(ru, rel=1e-12)


def test_geometry_clamps_zero_ris_distance():
    g = SystemGeometry(8.0, 8.0, 1.0)
    assert g.d_ru_raw == 0.0
    assert g.d_ru == 1.0


def test_geometry_alt_planar():
    g = SystemGeometry(8.0, 6.0, 4.0, alt_planar=True)
    assert g.d_ru == pytest.approx(np.hypot(2.0, 4.0))


@pytest.mark.parametrize("d0, d1", [(-0.1, 1.0), (8.5, 1.0), (1.0, -1.0)])
def test_geometry_rejects_out_of_range(d0, d1):
    with pytest.raises(ValueError):
        SystemGeometry(8.0, d0, d1)


def test_sampled_geometry_within_ranges():
    rng = make_rng(3, "geometry")
    cfg = GeometryConfig()
    for _ in range(500):
        g = sample_geometry(rng, cfg)
        assert 0.0 <= g.d0 <= 8.0 and 1.0 <= g.d1 <= 6.0
        assert g.d_bu >= 1.0 and g.d_ru >= 1.0


def test_unit_path_loss_entry_variance():
    # d_br = 1 and d0 = 0, d1 = 1 puts every link at the reference distance
    geo = SystemGeometry(1.0, 0.0, 1.0)
    assert geo.d_bu == geo.d_ru == 1.0
    rng = np.random.default_rng(11)
    n = 100_000
    g = np.array([sample_channels(rng, geo, 1, 1).G[0, 0] for _ in range(n // 10)])
    h = np.array([sample_channels(rng, geo, 1, 1).h[0] for _ in range(n // 10)])
    # variance of |x|^2 for unit complex Gaussian is 1, so sigma of the mean is 1/sqrt(n)
    for x in (g, h):
        assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 3.0 / np.sqrt(len(x))
    batch = sample_dataset(rng, rng, GeometryConfig(d_br=1.0, d0_range=(0.0, 0.0), d1_range=(1.0, 1.0)), 1, 1, n)
    for x in (batch.h, batch.f, batch.G):
        assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 3.0 / np.sqrt(n)


def test_sampling_is_deterministic():
    geo = SystemGeometry(8.0, 3.0, 2.0)
    a = sample_channels(make_rng(5, "channels"), geo, 2, 4)
    b = sample_channels(make_rng(5, "channels"), geo, 2, 4)
    for x, y in ((a.h, b.h), (a.f, b.f), (a.G, b.G)):
        assert np.array_equal(x, y)


def test_sample_channels_rejects_bad_sizes():
    with pytest.raises(ValueError):
        sample_channels(np.random.default_rng(0), SystemGeometry(8.0, 1.0, 1.0), 0, 4)


def test_build_q_scalar_and_identity():
    assert np.allclose(build_q(np.array([[2 + 1j]]), np.array([1 - 1j])), [[(2 + 1j) * (1 - 1j)]])
    f = np.array([0.3 + 2j, -1.5j])
    q = build_q(np.eye(2), f)
    assert np.array_equal(q, np.diag(f))


def test_build_q_reproduces_reflected_channel():
    rng = np.random.default_rng(0)
    for _ in range(100):
        M, N = rng.integers(1, 5, size=2)
        G = rng.normal(size=(M, N)) + 1j * rng.normal(size=(M, N))
        f = rng.normal(size=N) + 1j * rng.normal(size=N)
        u = np.exp(1j * rng.uniform(0, 2 * np.pi, N))
        assert np.allclose(build_q(G, f) @ u, G @ np.diag(u) @ f, atol=1e-12, rtol=0)


def test_build_q_shape_mismatch():
    with pytest.raises(ValueError):
        build_q(np.ones((2, 3)), np.ones(4))


def test_features_direct_readoff():
    ch = ChannelRealization(h=np.array([3 - 1j]), f=np.array([1.0 + 0j]), G=np.array([[1 + 2j]]))
    assert np.array_equal(build_features(ch), [1.0, 2.0, 3.0, -1.0])


def test_features_length_and_zero_case():
    assert feature_length(2, 2) == 12
    z = ChannelRealization(np.zeros(2, complex), np.zeros(2, complex), np.zeros((2, 2), complex))
    v = build_features(z)
    assert v.shape == (12,) and not np.any(v)


def test_features_column_major_and_batch_agree():
    rng = np.random.default_rng(1)
    batch = sample_dataset(rng, rng, GeometryConfig(), 2, 3, 4)
    rows = build_features(batch)
    for k in range(len(batch)):
        single = build_features(batch.realization(k))
        assert np.array_equal(rows[k], single)
    q = batch.q[0]
    # first M real entries are column 0 of Q
    assert np.array_equal(rows[0][:2], q[:, 0].real)


def test_normalize_block_rms():
    rng = np.random.default_rng(2)
    batch = sample_dataset(rng, rng, GeometryConfig(), 2, 4, 20)
    v = normalize_features(build_features(batch), 4, 2, "block", 3.0)
    nq = 2 * 4 * 2
    assert np.allclose(np.sqrt(np.mean(v[:, :nq] ** 2, axis=1)), 3.0)
    assert np.allclose(np.sqrt(np.mean(v[:, nq:] ** 2, axis=1)), 3.0)
    zero = normalize_features(np.zeros((1, 20)), 4, 2)
    assert not np.any(zero)
    with pytest.raises(ValueError):
        normalize_features(v, 4, 2, "bogus")


def test_batch_indexing():
    rng = np.random.default_rng(4)
    batch = sample_dataset(rng, rng, GeometryConfig(), 1, 2, 5)
    sub = batch[[1, 3]]
    assert isinstance(sub, ChannelBatch) and len(sub) == 2
    assert np.array_equal(sub.q[1], batch.q[3])
    assert len(batch[2]) == 1
    empty = sample_dataset(rng, rng, GeometryConfig(), 1, 2, 0)
    assert len(empty) == 0 and empty.q.shape == (0, 1, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_streams_are_independent(seed):
    a = make_rng(seed, "geometry").random(4)
    b = make_rng(seed, "channels").random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, make_rng(seed, "geometry").random(4))
