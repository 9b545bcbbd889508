import hashlib
from pathlib import Path

import numpy as np

from speechmood.audio import read_wav
from speechmood.corpus import MoodLabel, load_manifest
from speechmood.labels import load_labels
from speechmood.metrics import pcc
from speechmood.synth import SynthConfig, generate_corpus, plan_labels

SMALL = SynthConfig(n_subjects=3, weeks=7, personal_calls_per_week=1,
                    segments_per_call=2, seed=4)


def _tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


class TestGenerator:
    def test_replay_byte_identical(self, tmp_path):
        generate_corpus(SMALL, tmp_path / "a")
        generate_corpus(SMALL, tmp_path / "b")
        assert _tree_digest(tmp_path / "a") == _tree_digest(tmp_path / "b")

    def test_different_seed_differs(self, tmp_path):
        generate_corpus(SMALL, tmp_path / "a")
        other = SynthConfig(n_subjects=3, weeks=7, personal_calls_per_week=1,
                            segments_per_call=2, seed=5)
        generate_corpus(other, tmp_path / "b")
        assert _tree_digest(tmp_path / "a") != _tree_digest(tmp_path / "b")

    def test_outputs_reload_cleanly(self, tmp_path):
        manifest, labels = generate_corpus(SMALL, tmp_path)
        reloaded = load_manifest(tmp_path / "manifest.json")
        assert len(reloaded.segments) == len(manifest.segments)
        relabels = load_labels(tmp_path / "truth_labels.json")
        assert {l.segment_id for l in relabels} == {s.segment_id for s in manifest.segments}

    def test_scores_follow_rule_table(self, tmp_path):
        manifest, _ = generate_corpus(SMALL, tmp_path)
        for a in manifest.assessments:
            assert a.mood in (MoodLabel.EUTHYMIC, MoodLabel.MANIC, MoodLabel.DEPRESSED)

    def test_every_subject_has_all_states(self):
        subjects, assessments, _, _ = plan_labels(SynthConfig(seed=0))
        for s in subjects:
            moods = {a.mood for a in assessments if a.subject_id == s.subject_id}
            assert moods == {MoodLabel.EUTHYMIC, MoodLabel.MANIC, MoodLabel.DEPRESSED}

    def test_segment_bounds_inside_calls(self, tmp_path):
        manifest, _ = generate_corpus(SMALL, tmp_path)
        durations = {c.call_id: c.duration_s for c in manifest.calls}
        for seg in manifest.segments:
            assert 0.0 <= seg.start_s < seg.end_s <= durations[seg.call_id] + 1e-9
            assert seg.annotation_eligible

    def test_coupling_target_at_scale(self):
        cfg = SynthConfig(n_subjects=12, weeks=30, personal_calls_per_week=2,
                          segments_per_call=3, seed=0)
        _, _, _, labels = plan_labels(cfg)
        assert len(labels) >= 2000
        a = np.array([l.activation for l in labels])
        v = np.array([l.valence for l in labels])
        assert abs(pcc(a, v) - 0.46) <= 0.08

    def test_manic_calls_louder_than_depressed(self, tmp_path):
        manifest, _ = generate_corpus(SynthConfig(n_subjects=4, weeks=7, seed=1), tmp_path)
        assessments = {a.assessment_id: a for a in manifest.assessments}
        for subject in manifest.subjects:
            energies = {MoodLabel.MANIC: [], MoodLabel.DEPRESSED: []}
            for call in manifest.calls_of_subject(subject.subject_id):
                if call.linked_assessment_id is None:
                    continue
                mood = assessments[call.linked_assessment_id].mood
                if mood not in energies:
                    continue
                audio = read_wav(tmp_path / call.audio_path)
                for seg in manifest.segments_of_call(call.call_id):
                    clip = audio.slice_seconds(seg.start_s, seg.end_s)
                    energies[mood].append(float(np.mean(clip.samples**2)))
            assert np.mean(energies[MoodLabel.MANIC]) > np.mean(energies[MoodLabel.DEPRESSED])

    def test_audio_is_8khz_mono_pcm(self, tmp_path):
        manifest, _ = generate_corpus(SMALL, tmp_path)
        audio = read_wav(tmp_path / manifest.calls[0].audio_path)
        assert audio.sample_rate_hz == 8000
