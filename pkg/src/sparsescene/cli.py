"""Command-line interface.

Subcommands
-----------
``make-corpus``  synthesise the desk-scale corpus
``learn-dict``   learn a dictionary bank from a corpus
``simulate``     render a manifest's scenarios to WAV files
``classify``     blind analysis of one WAV against a bank
``separate``     split one WAV into speech and noise estimates
``evaluate``     run a full campaign and write report files

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every flag can also be supplied via ``SPARSESCENE_<FLAG>`` environment
variables or a ``key = value`` file passed with ``--config``; explicit flags
win over the environment, which wins over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bank import DictionaryBank
from .config import ENV_PREFIX, load_config_file, parse_bool, resolve
from .corpus import Corpus, generate_corpus, read_wav, write_wav
from .errors import DataError, NumericalError
from .evaluate import analyze_signal, run_manifest, simulate_manifest
from .manifest import Manifest
from .regimes import ALL_REGIMES
from .training import learn_bank
from .dictionary import METHODS

__all__ = ["main", "build_parser"]

log = logging.getLogger(__name__)


class _UsageError(Exception):
    """Raised by handlers for problems that are usage, not data."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures exit with status 1."""

    def error(self, message):  # noqa: A002 - argparse API
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="sparsescene",
        description="Dictionary-based speech/noise scene analysis tools.",
    )
    parser.add_argument("--config", help="key = value options file")
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="debug-level logging"
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("make-corpus", help="synthesise the desk-scale corpus")
    p.add_argument("--out", help="corpus output directory")
    p.add_argument("--seed", type=int, help="generation seed (default 0)")
    p.add_argument(
        "--noise-seconds", type=float, help="length of each noise recording (default 40)"
    )
    p.set_defaults(handler=_cmd_make_corpus)

    p = sub.add_parser("learn-dict", help="learn a dictionary bank from a corpus")
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--method", choices=METHODS, help="learning method (default kmeans)")
    p.add_argument("--tw", type=float, help="within-source similarity threshold (default 0.8)")
    p.add_argument("--tb", type=float, help="between-source similarity threshold (default 0.8)")
    p.add_argument("--atoms", type=int, help="atoms per source (default 20)")
    p.add_argument("--seed", type=int, help="learning seed (default 0)")
    p.add_argument("--out", help="bank output file (.npz)")
    p.set_defaults(handler=_cmd_learn_dict)

    p = sub.add_parser("simulate", help="render a manifest's scenarios to WAV files")
    p.add_argument("--manifest", help="manifest JSON file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("classify", help="blind analysis of one WAV against a bank")
    p.add_argument("--bank", help="bank file (.npz)")
    p.add_argument("--wav", help="input WAV file")
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("separate", help="split one WAV into speech and noise estimates")
    p.add_argument("--bank", help="bank file (.npz)")
    p.add_argument("--wav", help="input WAV file")
    p.add_argument("--out-prefix", help="prefix for <prefix>_speech.wav / <prefix>_noise.wav")
    p.set_defaults(handler=_cmd_separate)

    p = sub.add_parser("evaluate", help="run a full campaign and write report files")
    p.add_argument("--manifest", help="manifest JSON file")
    p.add_argument("--bank", help="use this prebuilt bank instead of learning per method")
    p.add_argument(
        "--regimes", help=f"comma-separated regimes overriding the manifest {ALL_REGIMES}"
    )
    p.add_argument("--out", help="output directory")
    p.add_argument(
        "--resume",
        type=parse_bool,
        metavar="BOOL",
        help="reuse completed rows found in the output directory (default true)",
    )
    p.set_defaults(handler=_cmd_evaluate)

    return parser


def _require(name: str, value):
    if value is None:
        raise _UsageError(
            f"missing --{name.replace('_', '-')} (or {ENV_PREFIX}{name.upper()})"
        )
    return value


def _cmd_make_corpus(args, conf) -> dict:
    out = _require("out", resolve("out", args.out, file_values=conf, default=None))
    seed = resolve("seed", args.seed, file_values=conf, default=0, parse=int)
    noise_seconds = resolve(
        "noise_seconds", args.noise_seconds, file_values=conf, default=40.0, parse=float
    )
    root = generate_corpus(Path(out), seed=seed, noise_seconds=noise_seconds)
    corpus = Corpus.from_dir(root)
    return {
        "corpus_dir": str(root),
        "noises": sorted(corpus.noises),
        "speakers": sorted(corpus.speakers),
    }


def _cmd_learn_dict(args, conf) -> dict:
    corpus_dir = _require(
        "corpus", resolve("corpus", args.corpus, file_values=conf, default=None)
    )
    out = _require("out", resolve("out", args.out, file_values=conf, default=None))
    method = resolve("method", args.method, file_values=conf, default="kmeans")
    if method not in METHODS:
        raise _UsageError(f"unknown method {method!r}; choose from {METHODS}")
    tw = resolve("tw", args.tw, file_values=conf, default=0.8, parse=float)
    tb = resolve("tb", args.tb, file_values=conf, default=0.8, parse=float)
    atoms = resolve("atoms", args.atoms, file_values=conf, default=20, parse=int)
    seed = resolve("seed", args.seed, file_values=conf, default=0, parse=int)
    corpus = Corpus.from_dir(corpus_dir)
    bank = learn_bank(corpus, method, atoms, tw=tw, tb=tb, seed=seed)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    bank.save(out_path)
    return {
        "bank": str(out_path),
        "method": method,
        "noises": list(bank.noise_labels),
        "speakers": list(bank.speaker_labels),
        "atoms_per_source": {
            **{f"noise/{l}": bank.get_noise(l).atoms.shape[1] for l in bank.noise_labels},
            **{
                f"speaker/{l}": bank.get_speaker(l).atoms.shape[1]
                for l in bank.speaker_labels
            },
        },
        "content_hash": bank.content_hash(),
    }


def _cmd_simulate(args, conf) -> dict:
    manifest_path = _require(
        "manifest", resolve("manifest", args.manifest, file_values=conf, default=None)
    )
    out = _require("out", resolve("out", args.out, file_values=conf, default=None))
    manifest = Manifest.from_file(manifest_path)
    return simulate_manifest(manifest, Path(out))


def _load_bank_and_wav(args, conf) -> tuple[DictionaryBank, np.ndarray]:
    bank_path = _require("bank", resolve("bank", args.bank, file_values=conf, default=None))
    wav_path = _require("wav", resolve("wav", args.wav, file_values=conf, default=None))
    bank = DictionaryBank.load(bank_path)
    sr = int(bank.feature_params.get("sample_rate", 8000))
    _, samples = read_wav(Path(wav_path), expect_sr=sr)
    return bank, samples


def _cmd_classify(args, conf) -> dict:
    bank, samples = _load_bank_and_wav(args, conf)
    analysis, _ = analyze_signal(bank, samples)
    return analysis


def _cmd_separate(args, conf) -> dict:
    prefix = _require(
        "out_prefix", resolve("out_prefix", args.out_prefix, file_values=conf, default=None)
    )
    bank, samples = _load_bank_and_wav(args, conf)
    analysis, sep = analyze_signal(bank, samples)
    sr = int(bank.feature_params.get("sample_rate", 8000))
    speech_path = Path(f"{prefix}_speech.wav")
    noise_path = Path(f"{prefix}_noise.wav")
    speech_path.parent.mkdir(parents=True, exist_ok=True)
    write_wav(speech_path, sep.speech, sr)
    write_wav(noise_path, sep.noise, sr)
    analysis["speech_wav"] = str(speech_path)
    analysis["noise_wav"] = str(noise_path)
    return analysis


def _cmd_evaluate(args, conf) -> dict:
    manifest_path = _require(
        "manifest", resolve("manifest", args.manifest, file_values=conf, default=None)
    )
    out = _require("out", resolve("out", args.out, file_values=conf, default=None))
    manifest = Manifest.from_file(manifest_path)
    regimes = resolve("regimes", args.regimes, file_values=conf, default=None)
    if regimes is not None:
        wanted = tuple(r.strip() for r in str(regimes).split(",") if r.strip())
        bad = [r for r in wanted if r not in ALL_REGIMES]
        if bad:
            raise _UsageError(f"unknown regimes {bad}; choose from {ALL_REGIMES}")
        if not wanted:
            raise _UsageError("--regimes given but empty")
        manifest.regimes = wanted
    resume = resolve("resume", args.resume, file_values=conf, default=True, parse=parse_bool)
    bank_path = resolve("bank", args.bank, file_values=conf, default=None)
    banks = None
    if bank_path is not None:
        bank = DictionaryBank.load(bank_path)
        banks = {bank.method: bank}
        manifest.methods = (bank.method,)
    return run_manifest(manifest, Path(out), resume=resume, banks=banks)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "handler", None) is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        conf = load_config_file(args.config)
        summary = args.handler(args, conf)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    except _UsageError as exc:
        print(f"sparsescene: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        log.error("%s", exc)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return 3
    except OSError as exc:
        log.error("%s", exc)
        return 2
