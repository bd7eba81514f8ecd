"""
视频读写、片段采样、数据清单与内容隔离划分测试
"""
import json

import numpy as np
import pytest

from models.errors import ManifestError, ShapeError, SplitError, VideoFormatError
from models.manifest import DatasetManifest, PixelFormat, ScorePolarity, VideoSidecar, load_manifest
from tools.split_tools import LabelScaler, make_split
from tools.video_tools import (
    RawVideo, VideoLibrary, load_raw_video, sample_eval_segments, sample_training_clips, sidecar_path,
    spatial_anchors, temporal_anchors, video_rng, write_raw_video
)


def _manifest(n_refs: int, per_ref: int = 3) -> DatasetManifest:
    refs = [{"id": f"r{i}", "file": f"r{i}.y"} for i in range(n_refs)]
    dists = [{"id": f"r{i}_d{j}", "reference_id": f"r{i}", "file": f"r{i}_d{j}.y", "score": float(j)}
             for i in range(n_refs) for j in range(per_ref)]
    return DatasetManifest.model_validate(
        {"score_polarity": "higher_is_better", "references": refs, "distorted": dists})


def _video(frames, height, width, seed=0):
    return RawVideo.from_array(np.random.default_rng(seed).integers(0, 256, (frames, height, width)))


class TestRawVideo:

    def test_frame_count_from_sidecar(self, tmp_path):
        path = tmp_path / "v.y"
        path.write_bytes(bytes(range(24)))
        video = load_raw_video(path, {"width": 4, "height": 2, "frames": 3})
        assert video.frames == 3
        assert video.luma[1, 0].tolist() == [8, 9, 10, 11]

    def test_size_mismatch(self, tmp_path):
        path = tmp_path / "v.y"
        path.write_bytes(bytes(23))
        with pytest.raises(VideoFormatError):
            load_raw_video(path, {"width": 4, "height": 2, "frames": 3})

    def test_gray_round_trip(self, tmp_path):
        x = np.arange(6 * 8 * 5, dtype=np.int64).reshape(5, 6, 8) % 256
        video = RawVideo.from_array(x)
        path = write_raw_video(video, tmp_path / "grad.y")
        assert sidecar_path(path).is_file()
        assert path.read_bytes() == video.luma.tobytes()
        np.testing.assert_array_equal(load_raw_video(path).luma, video.luma)

    def test_yuv420p_keeps_luma_only(self, tmp_path):
        video = _video(3, 4, 6)
        path = write_raw_video(video, tmp_path / "v.yuv", PixelFormat.YUV420P)
        assert path.stat().st_size == 3 * 4 * 6 * 3 // 2
        np.testing.assert_array_equal(load_raw_video(path).luma, video.luma)

    def test_sidecar_rules(self):
        with pytest.raises(ValueError):
            VideoSidecar(width=4, height=2, frames=1, bitdepth=10)
        with pytest.raises(ValueError):
            VideoSidecar(width=5, height=2, frames=1, pix_fmt="yuv420p")
        assert VideoSidecar(width=4, height=2, frames=3, pix_fmt="yuv420p").expected_size == 36

    def test_missing_sidecar(self, tmp_path):
        path = tmp_path / "orphan.y"
        path.write_bytes(bytes(8))
        with pytest.raises(VideoFormatError):
            load_raw_video(path)


class TestSampling:

    @pytest.mark.parametrize("height, width, expected", [(224, 224, 4), (112, 112, 1), (432, 768, 18)])
    def test_tiles_per_draw(self, height, width, expected):
        assert len(spatial_anchors(height, width, 112)) == expected

    def test_training_clips_per_draw(self):
        ref = _video(10, 224, 224)
        clips = sample_training_clips(ref, ref, 4, 112, np.random.default_rng(0))
        assert len(clips) == 4
        assert len({c.origin.frame for c in clips}) == 1
        assert clips[0].distorted.shape == (1, 4, 112, 112)

    def test_clip_values(self):
        ref = RawVideo.from_array(np.full((4, 8, 8), 200))
        dist = RawVideo.from_array(np.full((4, 8, 8), 100))
        clip = sample_training_clips(ref, dist, 4, 8, np.random.default_rng(0), label=0.3)[0]
        np.testing.assert_allclose(clip.distorted.data, 100 / 255, rtol=1e-6)
        np.testing.assert_allclose(clip.residual.data, 100 / 255, rtol=1e-6)
        assert clip.label == 0.3

    def test_training_requires_generator(self):
        ref = _video(4, 8, 8)
        with pytest.raises(ValueError):
            sample_training_clips(ref, ref, 4, 8)

    @pytest.mark.parametrize("total, expected", [(120, [0, 60]), (150, [0, 60]), (59, [])])
    def test_temporal_anchors(self, total, expected):
        assert temporal_anchors(total, 60) == expected

    def test_eval_segments_enumeration(self):
        ref = _video(9, 40, 56)
        segments = sample_eval_segments(ref, ref, 4, 16)
        brute = [(t, r, c) for t in range(0, 9 - 4 + 1, 4) for r in range(0, 40 - 16 + 1, 16)
                 for c in range(0, 56 - 16 + 1, 16)]
        assert [(s.origin.frame, s.origin.row, s.origin.col) for s in segments] == brute

    def test_incongruent_pair(self):
        with pytest.raises(ShapeError):
            sample_eval_segments(_video(4, 16, 16), _video(4, 16, 12), 4, 8)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            sample_eval_segments(_video(4, 8, 8), _video(4, 8, 8), 4, 16)

    def test_video_rng_is_per_video(self):
        a = video_rng(0, 3, "clip_a").integers(0, 10 ** 9)
        assert a == video_rng(0, 3, "clip_a").integers(0, 10 ** 9)
        assert a != video_rng(0, 3, "clip_b").integers(0, 10 ** 9)
        assert a != video_rng(0, 4, "clip_a").integers(0, 10 ** 9)


class TestManifest:

    def test_dangling_reference(self):
        with pytest.raises(ValueError):
            DatasetManifest.model_validate({
                "score_polarity": "lower_is_better",
                "references": [{"id": "a", "file": "a.y"}],
                "distorted": [{"id": "d", "reference_id": "b", "file": "d.y", "score": 1.0}],
            })

    def test_duplicate_ids(self):
        data = _manifest(2).model_dump()
        data["distorted"][1]["id"] = data["distorted"][0]["id"]
        with pytest.raises(ValueError):
            DatasetManifest.model_validate(data)

    def test_missing_polarity(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"references": [], "distorted": []}))
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_paths_resolve_against_manifest(self, noise_dataset):
        manifest = load_manifest(noise_dataset)
        assert manifest.score_polarity == ScorePolarity.LOWER_IS_BETTER
        library = VideoLibrary(manifest)
        ref, dist = library.pair(manifest.distorted[0])
        assert ref.shape == dist.shape == (8, 32, 32)
        assert len(library) == 2
        library.pair(manifest.distorted[1])
        assert len(library) == 3

    def test_groups(self):
        groups = _manifest(3, per_ref=2).groups()
        assert list(groups) == ["r0", "r1", "r2"]
        assert [d.id for d in groups["r1"]] == ["r1_d0", "r1_d1"]


class TestSplit:

    @pytest.mark.parametrize("n_refs, n_train", [(10, 8), (12, 10), (6, 5)])
    def test_split_sizes(self, n_refs, n_train):
        plan = make_split(_manifest(n_refs), 0.8, seed=1)
        assert len(plan.train_ids) == n_train
        assert len(plan.test_ids) == n_refs - n_train

    def test_content_isolation_over_many_seeds(self):
        manifest = _manifest(12)
        for seed in range(1000):
            plan = make_split(manifest, 0.8, seed)
            assert len(plan.train_ids) == 10 and len(plan.test_ids) == 2
            train_refs = {d.reference_id for d in plan.train_entries(manifest)}
            test_refs = {d.reference_id for d in plan.test_entries(manifest)}
            assert not train_refs & test_refs
            assert len(plan.train_entries(manifest)) + len(plan.test_entries(manifest)) == 36

    def test_same_seed_same_plan(self):
        manifest = _manifest(10)
        assert make_split(manifest, 0.8, 42) == make_split(manifest, 0.8, 42)

    def test_seeds_differ(self):
        manifest = _manifest(10)
        plans = {tuple(make_split(manifest, 0.8, seed).test_ids) for seed in range(20)}
        assert len(plans) > 1

    def test_too_few_references(self):
        with pytest.raises(SplitError):
            make_split(_manifest(1), 0.8, 0)

    def test_empty_side(self):
        with pytest.raises(SplitError):
            make_split(_manifest(2), 0.9, 0)


class TestLabelScaler:

    def test_higher_is_better(self):
        scaler = LabelScaler.fit([20.0, 80.0, 50.0], ScorePolarity.HIGHER_IS_BETTER)
        assert scaler.normalize(80.0) == 1.0
        assert scaler.normalize(20.0) == 0.0
        assert scaler.denormalize(0.5) == pytest.approx(50.0)

    def test_lower_is_better_flips(self):
        scaler = LabelScaler.fit([2.0, 35.0], ScorePolarity.LOWER_IS_BETTER)
        assert scaler.normalize(2.0) == 1.0
        assert scaler.normalize(35.0) == 0.0
        assert scaler.denormalize(scaler.normalize(10.0)) == pytest.approx(10.0)

    def test_constant_scores(self):
        assert LabelScaler.fit([3.0, 3.0], ScorePolarity.HIGHER_IS_BETTER).normalize(3.0) == 0.5

    def test_dict_round_trip(self):
        scaler = LabelScaler.fit([1.0, 4.0], ScorePolarity.LOWER_IS_BETTER)
        assert LabelScaler.from_dict(json.loads(json.dumps(scaler.to_dict()))) == scaler
