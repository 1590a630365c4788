import json

import numpy as np
import pytest

import sparsescene as ss
from sparsescene.bank import DictionaryBank
from sparsescene.dictionary import LearnedDictionary
from sparsescene.errors import DataError
from sparsescene.evaluate import prepare_corpus, run_key
from sparsescene.manifest import Manifest


def _small_manifest(corpus_root, **overrides):
    kwargs = dict(
        corpus_dir=corpus_root,
        n_scenarios=1,
        half_duration_s=6.0,
        utterances_per_half=1,
        methods=("kmeans",),
        regimes=("ground_truth",),
        snrs_db=(0.0,),
    )
    kwargs.update(overrides)
    return Manifest(**kwargs)


def test_run_manifest_produces_report_and_rows(corpus_root, kmeans_bank, tmp_path):
    manifest = _small_manifest(corpus_root)
    out = tmp_path / "out"
    summary = ss.run_manifest(manifest, out, banks={"kmeans": kmeans_bank})
    assert summary["n_rows"] == 1
    assert summary["n_computed"] == 1
    assert summary["n_skipped"] == 0
    assert summary["n_failed"] == 0

    csv_text = (out / "report.csv").read_text()
    assert csv_text.count("\n") == 2  # header + one row
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["n_rows"] == 1
    scen = json.loads((out / "scenarios.json").read_text())
    assert len(scen["scenarios"]) == 1
    assert len(list((out / "rows").glob("*.json"))) == 1


def test_rows_are_stored_under_their_content_key(corpus_root, kmeans_bank, tmp_path):
    manifest = _small_manifest(corpus_root)
    out = tmp_path / "out"
    ss.run_manifest(manifest, out, banks={"kmeans": kmeans_bank})
    row_path = next((out / "rows").glob("*.json"))
    row = json.loads(row_path.read_text())
    assert row["run_key"] == row_path.stem

    corpus = ss.Corpus.from_dir(corpus_root)
    scenario = ss.generate_scenarios(
        corpus, 1, seed=0, half_duration_s=6.0, utterances_per_half=1
    )[0]
    expected = run_key(
        scenario, "ground_truth", 0.0, kmeans_bank.content_hash(), manifest.eval_params
    )
    assert row_path.stem == expected


def test_resume_skips_completed_rows_and_keeps_bytes(corpus_root, kmeans_bank, tmp_path):
    manifest = _small_manifest(corpus_root)
    out = tmp_path / "out"
    ss.run_manifest(manifest, out, banks={"kmeans": kmeans_bank})
    first = (out / "report.csv").read_bytes()

    again = ss.run_manifest(manifest, out, banks={"kmeans": kmeans_bank})
    assert again["n_computed"] == 0
    assert again["n_skipped"] == 1
    assert (out / "report.csv").read_bytes() == first

    fresh = ss.run_manifest(manifest, out, resume=False, banks={"kmeans": kmeans_bank})
    assert fresh["n_computed"] == 1
    assert (out / "report.csv").read_bytes() == first


def test_parallel_execution_matches_serial_output(corpus_root, kmeans_bank, tmp_path):
    serial = _small_manifest(corpus_root, n_scenarios=2, parallelism=1)
    threaded = _small_manifest(corpus_root, n_scenarios=2, parallelism=2)
    out1, out2 = tmp_path / "serial", tmp_path / "threaded"
    ss.run_manifest(serial, out1, banks={"kmeans": kmeans_bank})
    ss.run_manifest(threaded, out2, banks={"kmeans": kmeans_bank})
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
    assert (out1 / "aggregate.json").read_bytes() == (out2 / "aggregate.json").read_bytes()


def test_failed_runs_become_rows_not_exceptions(corpus_root, tmp_path):
    # A bank whose labels do not match the corpus: every run fails at the
    # noise-lookup stage but the campaign still completes and reports it.
    atoms = np.abs(np.random.default_rng(0).standard_normal((129, 2))) + 0.1
    atoms /= np.linalg.norm(atoms, axis=0)
    toy = DictionaryBank(
        {"ghost": LearnedDictionary(atoms, "kmeans")},
        {"static": LearnedDictionary(atoms, "kmeans")},
        method="kmeans",
    )
    manifest = _small_manifest(corpus_root)
    summary = ss.run_manifest(manifest, tmp_path / "out", banks={"kmeans": toy})
    assert summary["n_rows"] == 1
    assert summary["n_failed"] == 1
    row = json.loads(next((tmp_path / "out" / "rows").glob("*.json")).read_text())
    assert row["failure_stage"] == "noise_id"
    assert row["error"]


def test_missing_corpus_is_a_data_error(tmp_path):
    manifest = _small_manifest(tmp_path / "no_such_corpus")
    with pytest.raises(DataError):
        ss.run_manifest(manifest, tmp_path / "out")


def test_prepare_corpus_synthesises_on_demand(tmp_path):
    root = tmp_path / "auto"
    manifest = _small_manifest(
        root, generate_corpus_seed=3, corpus_noise_seconds=16.0
    )
    corpus = prepare_corpus(manifest)
    assert (root / "corpus.json").exists()
    assert sorted(corpus.noises) == ["am", "band", "bursts", "hum"]
    # Second call loads the existing corpus instead of regenerating.
    again = prepare_corpus(manifest)
    assert sorted(again.noises) == sorted(corpus.noises)


def test_simulate_manifest_writes_component_wavs(corpus_root, tmp_path):
    manifest = _small_manifest(corpus_root, snrs_db=(0.0, 10.0))
    out = tmp_path / "sim"
    summary = ss.simulate_manifest(manifest, out)
    assert summary["n_scenarios"] == 1
    assert summary["n_files"] == 6
    for snr_tag in ("+0dB", "+10dB"):
        for part in ("mixture", "speech", "noise"):
            assert (out / "audio" / f"s0000_{snr_tag}_{part}.wav").exists()
    sr, mix = ss.read_wav(out / "audio" / "s0000_+0dB_mixture.wav")
    _, speech = ss.read_wav(out / "audio" / "s0000_+0dB_speech.wav")
    _, noise = ss.read_wav(out / "audio" / "s0000_+0dB_noise.wav")
    assert sr == 8000
    # Components were mixed in float32, so compare after the same rounding.
    assert np.array_equal(
        mix.astype(np.float32), speech.astype(np.float32) + noise.astype(np.float32)
    )


def test_analyze_signal_runs_the_blind_pipeline(corpus, kmeans_bank):
    scenario = ss.generate_scenarios(corpus, 1, seed=0)[0]
    rendered = ss.render_scenario(corpus, scenario, snr_db=10.0)
    analysis, sep = ss.analyze_signal(kmeans_bank, rendered.mixture)
    assert set(analysis) == {
        "speech_spans_s",
        "noise_first",
        "noise_second",
        "noise_transition_s",
        "speaker_ranking",
        "speaker",
        "estimated_snr_db",
    }
    assert analysis["noise_first"] in kmeans_bank.noise_labels
    assert analysis["noise_second"] in kmeans_bank.noise_labels
    assert sorted(analysis["speaker_ranking"]) == sorted(kmeans_bank.speaker_labels)
    assert analysis["speaker"] == analysis["speaker_ranking"][0]
    assert sep.speech.shape == rendered.mixture.shape
    assert sep.noise.shape == rendered.mixture.shape
