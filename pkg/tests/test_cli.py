import json

import numpy as np
import pytest

import sparsescene as ss
from sparsescene.cli import main


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture(scope="module")
def cli_bank(corpus_root, tmp_path_factory):
    """A small bank learned through the CLI itself, reused by later tests."""
    path = tmp_path_factory.mktemp("cli") / "bank.npz"
    code = main(
        [
            "learn-dict",
            "--corpus",
            str(corpus_root),
            "--method",
            "random",
            "--atoms",
            "4",
            "--out",
            str(path),
        ]
    )
    assert code == 0
    return path


@pytest.fixture(scope="module")
def short_wav(corpus, tmp_path_factory):
    s = ss.generate_scenarios(corpus, 1, seed=0, half_duration_s=4.0, utterances_per_half=1)[0]
    rendered = ss.render_scenario(corpus, s, snr_db=10.0)
    path = tmp_path_factory.mktemp("wav") / "mix.wav"
    ss.write_wav(path, rendered.mixture, corpus.sample_rate)
    return path


def test_no_command_prints_help_and_fails(capsys):
    assert main([]) == 1
    assert "COMMAND" in capsys.readouterr().err


def test_help_exits_zero():
    assert main(["--help"]) == 0


def test_unknown_command_is_a_usage_error(capsys):
    assert main(["frobnicate"]) == 1


def test_missing_required_flag_is_a_usage_error(monkeypatch, capsys):
    monkeypatch.delenv("SPARSESCENE_OUT", raising=False)
    assert main(["make-corpus"]) == 1
    assert "--out" in capsys.readouterr().err


def test_make_corpus_writes_a_corpus(tmp_path, capsys):
    out = tmp_path / "corpus"
    code, summary = _run(
        capsys,
        ["make-corpus", "--out", str(out), "--seed", "1", "--noise-seconds", "12"],
    )
    assert code == 0
    assert summary["noises"] == ["am", "band", "bursts", "hum"]
    assert (out / "corpus.json").exists()


def test_make_corpus_reads_flags_from_environment(tmp_path, monkeypatch, capsys):
    out = tmp_path / "envcorpus"
    monkeypatch.setenv("SPARSESCENE_OUT", str(out))
    monkeypatch.setenv("SPARSESCENE_NOISE_SECONDS", "12")
    code, summary = _run(capsys, ["make-corpus"])
    assert code == 0
    assert summary["corpus_dir"] == str(out)


def test_make_corpus_reads_flags_from_config_file(tmp_path, capsys):
    out = tmp_path / "confcorpus"
    conf = tmp_path / "tool.conf"
    conf.write_text(f"out = {out}\nnoise-seconds = 12\n")
    code, summary = _run(capsys, ["--config", str(conf), "make-corpus"])
    assert code == 0
    assert summary["corpus_dir"] == str(out)


def test_learn_dict_summary_describes_the_bank(corpus_root, tmp_path, capsys):
    out = tmp_path / "bank.npz"
    code, summary = _run(
        capsys,
        [
            "learn-dict",
            "--corpus",
            str(corpus_root),
            "--method",
            "random",
            "--atoms",
            "4",
            "--out",
            str(out),
        ],
    )
    assert code == 0
    assert summary["method"] == "random"
    assert summary["noises"] == ["am", "band", "bursts", "hum"]
    assert summary["speakers"] == ["spk1", "spk2", "spk3", "spk4"]
    assert summary["atoms_per_source"]["noise/am"] == 4
    assert out.exists()
    reloaded = ss.DictionaryBank.load(out)
    assert reloaded.content_hash() == summary["content_hash"]


def test_learn_dict_rejects_unknown_method(corpus_root, tmp_path, capsys):
    code = main(
        [
            "learn-dict",
            "--corpus",
            str(corpus_root),
            "--method",
            "pca",
            "--out",
            str(tmp_path / "b.npz"),
        ]
    )
    assert code == 1


def test_classify_reports_the_scene(cli_bank, short_wav, capsys):
    code, summary = _run(
        capsys, ["classify", "--bank", str(cli_bank), "--wav", str(short_wav)]
    )
    assert code == 0
    assert {"noise_first", "noise_second", "speaker", "speaker_ranking"} <= set(summary)
    assert summary["speaker"] in ("spk1", "spk2", "spk3", "spk4")


def test_classify_with_garbage_bank_is_a_data_error(short_wav, tmp_path, capsys):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"not a bank")
    assert main(["classify", "--bank", str(bad), "--wav", str(short_wav)]) == 2


def test_classify_with_missing_wav_is_a_data_error(cli_bank, tmp_path, capsys):
    missing = tmp_path / "absent.wav"
    assert main(["classify", "--bank", str(cli_bank), "--wav", str(missing)]) == 2


def test_separate_writes_component_wavs(cli_bank, short_wav, tmp_path, capsys):
    prefix = tmp_path / "sep" / "mix"
    code, summary = _run(
        capsys,
        [
            "separate",
            "--bank",
            str(cli_bank),
            "--wav",
            str(short_wav),
            "--out-prefix",
            str(prefix),
        ],
    )
    assert code == 0
    sr, speech = ss.read_wav(prefix.parent / "mix_speech.wav")
    _, noise = ss.read_wav(prefix.parent / "mix_noise.wav")
    assert sr == 8000
    assert speech.shape == noise.shape
    assert np.isfinite(speech).all()


def test_simulate_and_evaluate_via_manifest(corpus_root, cli_bank, tmp_path, capsys):
    manifest = {
        "corpus_dir": str(corpus_root),
        "n_scenarios": 1,
        "half_duration_s": 6.0,
        "utterances_per_half": 1,
        "regimes": ["ground_truth"],
        "snrs_db": [0.0],
    }
    mpath = tmp_path / "manifest.json"
    mpath.write_text(json.dumps(manifest))

    code, summary = _run(
        capsys, ["simulate", "--manifest", str(mpath), "--out", str(tmp_path / "sim")]
    )
    assert code == 0
    assert summary["n_files"] == 3

    code, summary = _run(
        capsys,
        [
            "evaluate",
            "--manifest",
            str(mpath),
            "--bank",
            str(cli_bank),
            "--out",
            str(tmp_path / "eval"),
        ],
    )
    assert code == 0
    assert summary["n_rows"] == 1
    assert (tmp_path / "eval" / "report.csv").exists()

    # Resuming through the CLI skips the completed row.
    code, summary = _run(
        capsys,
        [
            "evaluate",
            "--manifest",
            str(mpath),
            "--bank",
            str(cli_bank),
            "--out",
            str(tmp_path / "eval"),
        ],
    )
    assert code == 0
    assert summary["n_skipped"] == 1


def test_evaluate_rejects_unknown_regimes(corpus_root, tmp_path, capsys):
    mpath = tmp_path / "m.json"
    mpath.write_text(json.dumps({"corpus_dir": str(corpus_root)}))
    code = main(
        [
            "evaluate",
            "--manifest",
            str(mpath),
            "--regimes",
            "imaginary",
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert code == 1


def test_evaluate_with_missing_manifest_is_a_data_error(tmp_path, capsys):
    code = main(
        ["evaluate", "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]
    )
    assert code == 2
