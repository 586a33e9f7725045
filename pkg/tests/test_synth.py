"""Tests for the synthetic stroke generator."""

import numpy as np
import pytest

from inkrec.features import extract
from inkrec.preprocess import preprocess_pipeline
from inkrec.synth import ShapeSpec, default_specs, generate


class TestShapeSpec:
    def test_rejects_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            ShapeSpec("x", "squiggle")

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError, match="noise"):
            ShapeSpec("x", "line", noise=-0.1)

    def test_rejects_bad_point_range(self):
        with pytest.raises(ValueError, match="points_min"):
            ShapeSpec("x", "line", points_min=10, points_max=5)


class TestGenerate:
    def test_counts_and_metadata(self):
        spec = ShapeSpec("st01", "line")
        ds = generate(spec, n=3, writers=2, sessions=2, seed=42)
        assert len(ds.samples) == 3 * 2 * 2
        assert {s.label for s in ds.samples} == {"st01"}
        assert set(ds.writers) == {"w000", "w001"}
        assert set(ds.sessions) == {1, 2}
        for s in ds.samples:
            assert len(s.trace) >= spec.points_min
            assert len(s.trace) <= spec.points_max
            assert s.trace.t is not None

    def test_deterministic_for_seed(self):
        spec = ShapeSpec("st03", "arc", noise=0.02)
        a = generate(spec, n=2, writers=2, sessions=1, seed=7)
        b = generate(spec, n=2, writers=2, sessions=1, seed=7)
        for sa, sb in zip(a.samples, b.samples):
            np.testing.assert_array_equal(sa.trace.xy, sb.trace.xy)

    def test_different_seeds_differ(self):
        spec = ShapeSpec("st03", "arc", noise=0.02)
        a = generate(spec, n=1, writers=1, sessions=1, seed=7)
        b = generate(spec, n=1, writers=1, sessions=1, seed=8)
        assert not np.array_equal(a.samples[0].trace.xy, b.samples[0].trace.xy)

    def test_rejects_nonpositive_counts(self):
        spec = ShapeSpec("st01", "line")
        with pytest.raises(ValueError):
            generate(spec, n=0, writers=1, sessions=1, seed=1)
        with pytest.raises(ValueError):
            generate(spec, n=1, writers=0, sessions=1, seed=1)

    def test_writers_get_distinct_bias(self):
        spec = ShapeSpec("st01", "line", noise=0.0)
        ds = generate(spec, n=1, writers=2, sessions=1, seed=5)
        a = preprocess_pipeline(ds.samples[0].trace)
        b = preprocess_pipeline(ds.samples[1].trace)
        assert np.abs(a.xy - b.xy).max() > 1e-3

    def test_noiseless_line_collapses_under_preprocessing(self):
        # with zero noise the only variation is the polyline parameterization,
        # which arc-length resampling removes entirely for a straight stroke
        spec = ShapeSpec("st01", "line", angle=0.3, noise=0.0)
        ds = generate(spec, n=6, writers=1, sessions=1, seed=11)
        feats = [extract(preprocess_pipeline(s.trace)).frames for s in ds.samples]
        for f in feats[1:]:
            np.testing.assert_allclose(f, feats[0], atol=1e-9)


class TestDefaultSpecs:
    def test_catalog_size_and_uniqueness(self):
        specs = default_specs(12)
        assert len(specs) == 12
        assert len({s.label for s in specs}) == 12

    def test_count_out_of_range(self):
        with pytest.raises(ValueError):
            default_specs(0)
        with pytest.raises(ValueError):
            default_specs(13)

    def test_families_are_geometrically_separated(self):
        # mean pairwise distance between preprocessed samples should be far
        # smaller within a family than across families
        specs = default_specs(10)
        per_spec = []
        for spec in specs:
            ds = generate(spec, n=4, writers=2, sessions=1, seed=3)
            per_spec.append(
                np.stack([preprocess_pipeline(s.trace).xy for s in ds.samples])
            )

        def dist(a, b):
            return float(np.sqrt(np.mean((a - b) ** 2)))

        within, between = [], []
        for i, group in enumerate(per_spec):
            for a in range(len(group)):
                for b in range(a + 1, len(group)):
                    within.append(dist(group[a], group[b]))
            for j in range(i + 1, len(per_spec)):
                for a in range(len(group)):
                    for b in range(len(per_spec[j])):
                        between.append(dist(group[a], per_spec[j][b]))
        assert np.mean(between) > 3 * np.mean(within)
