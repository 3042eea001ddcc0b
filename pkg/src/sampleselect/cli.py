"""Batch runner: dataset in, per-document trace lines and an aggregate report out.

Two subcommands:

- ``run``: read a JSONL dataset ({"id", "article", "reference"?} per line),
  clean each article, dispatch it to the configured decoding method, and write
  one JSON line per document plus a report file. Per-document failures are
  recorded inline and the run continues (exit 2 at the end); bad inputs or
  configuration exit 1 before any generation.
- ``replay``: rescore every round persisted in a run's output and verify the
  recorded scores and chosen indices, exiting 0 only when everything matches.

Configuration comes from a ``key = value`` file (see README) with CLI flags
taking precedence. Environment variables are used only for endpoint
credentials (SAMPLESELECT_BACKEND_TOKEN, SAMPLESELECT_PARSE_TOKEN).
"""

from __future__ import annotations

import argparse
import ast
import json
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence, TextIO

from sampleselect.backends import (
    RandomDistributionBackend,
    RemoteCompletionBackend,
    SamplingBackend,
    ScriptedBackend,
    SyntheticHallucinationBackend,
)
from sampleselect.decoder import GenerationConfig, Method, generate
from sampleselect.errors import ConfigurationError, SampleSelectError, UsageError
from sampleselect.evaluation import EvalRecord, aggregate_report, rouge1_f1, summary_length_tokens
from sampleselect.grammar import (
    FallbackParseProvider,
    HeuristicParseProvider,
    ParseProvider,
    RemoteParseProvider,
)
from sampleselect.scoring import (
    ExactMatchEntailment,
    RemoteEntailment,
    agreement_score,
    mean_logprob,
    round_overlap_scores,
    round_unigram_nll_scores,
)
from sampleselect.textproc import clean_article, word_tokens

__all__ = ["main"]

_CONFIG_KEYS = {
    # generation
    "method", "n", "top_p", "temperature", "seed", "max_sentence_tokens",
    "max_sentences", "beams", "sentence_joiner", "selfcheck_aggregate",
    "prompt_template", "prompt_template_file",
    # backend
    "backend", "backend_url", "backend_script", "backend_loop", "backend_seed",
    "vocab_size", "end_weight", "truth", "fidelity", "decoys",
    "retries", "timeout",
    # services
    "parse", "parse_url", "entailment", "entail_url",
    # execution
    "workers",
}

_GENERATION_KEYS = (
    "method", "n", "top_p", "temperature", "seed", "max_sentence_tokens",
    "max_sentences", "beams", "sentence_joiner", "selfcheck_aggregate",
    "prompt_template",
)


@dataclass(frozen=True)
class DatasetRecord:
    """One input document; ``reference`` enables F1 scoring when present."""

    id: str
    article: str
    reference: str | None = None


def load_config_file(path: str | Path) -> dict[str, object]:
    """Parse the ``key = value`` config format.

    Blank lines and '#' comments are skipped. Values quoted like Python string
    literals are parsed as such (allowing embedded newlines via escapes);
    bare values become bool/int/float when they look like one, else strings.
    Unknown keys are rejected.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    settings: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        settings[key] = _parse_value(value, path, lineno)
    return settings


def _parse_value(value: str, path: str | Path, lineno: int) -> object:
    if value.startswith(("'", '"')):
        try:
            parsed = ast.literal_eval(value)
        except (SyntaxError, ValueError) as exc:
            raise UsageError(f"{path}:{lineno}: bad string literal: {exc}") from exc
        if not isinstance(parsed, str):
            raise UsageError(f"{path}:{lineno}: quoted value must be a string")
        return parsed
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Read and validate a JSONL dataset; duplicate ids or empty articles are
    rejected before any generation happens."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read dataset {path}: {exc}") from exc
    records: list[DatasetRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise UsageError(f"{path}:{lineno}: expected a JSON object")
        doc_id = obj.get("id")
        article = obj.get("article")
        reference = obj.get("reference")
        if not isinstance(doc_id, str) or not doc_id:
            raise UsageError(f"{path}:{lineno}: missing or invalid 'id'")
        if not isinstance(article, str) or not article.strip():
            raise UsageError(f"{path}:{lineno}: 'article' must be a non-empty string")
        if reference is not None and not isinstance(reference, str):
            raise UsageError(f"{path}:{lineno}: 'reference' must be a string when present")
        if doc_id in seen:
            raise UsageError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        records.append(DatasetRecord(id=doc_id, article=article, reference=reference))
    if not records:
        raise UsageError(f"dataset {path} contains no records")
    return records


def build_generation_config(settings: dict[str, object]) -> GenerationConfig:
    if "prompt_template_file" in settings:
        template_path = str(settings["prompt_template_file"])
        try:
            settings = {**settings, "prompt_template": Path(template_path).read_text(encoding="utf-8")}
        except OSError as exc:
            raise UsageError(f"cannot read prompt template {template_path}: {exc}") from exc
    kwargs = {key: settings[key] for key in _GENERATION_KEYS if key in settings}
    try:
        return GenerationConfig(**kwargs)
    except ConfigurationError as exc:
        raise UsageError(f"invalid generation config: {exc}") from exc


def build_backend(settings: dict[str, object]) -> SamplingBackend:
    kind = settings.get("backend")
    if kind is None:
        raise UsageError("no backend configured (set 'backend' in the config or --backend)")
    if kind == "remote":
        url = settings.get("backend_url")
        if not url:
            raise UsageError("backend 'remote' needs backend_url")
        return RemoteCompletionBackend(
            str(url),
            timeout=float(settings.get("timeout", 60.0)),
            retries=int(settings.get("retries", 3)),
        )
    if kind == "scripted":
        script_path = settings.get("backend_script")
        if not script_path:
            raise UsageError("backend 'scripted' needs backend_script (a JSON file)")
        try:
            payload = json.loads(Path(str(script_path)).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read backend script {script_path}: {exc}") from exc
        completions = payload.get("completions") if isinstance(payload, dict) else payload
        if not isinstance(completions, list):
            raise UsageError("backend script must be a list or {'completions': [...]}")
        loop = bool(settings.get("backend_loop", False))
        if isinstance(payload, dict) and "loop" in payload:
            loop = bool(payload["loop"])
        try:
            return ScriptedBackend(completions, loop=loop)
        except (TypeError, KeyError) as exc:
            raise UsageError(f"bad backend script entry: {exc}") from exc
    if kind == "random":
        return RandomDistributionBackend(
            seed=int(settings.get("backend_seed", 0)),
            vocab_size=int(settings.get("vocab_size", 8)),
            end_weight=float(settings.get("end_weight", 0.5)),
        )
    if kind == "synthetic":
        truth_value = settings.get("truth")
        if not truth_value:
            raise UsageError("backend 'synthetic' needs truth (comma-separated fact tokens)")
        truth = [item.strip() for item in str(truth_value).split(",") if item.strip()]
        try:
            return SyntheticHallucinationBackend(
                truth,
                fidelity=float(settings.get("fidelity", 0.6)),
                decoys=int(settings.get("decoys", 9)),
                seed=int(settings.get("backend_seed", 0)),
            )
        except ConfigurationError as exc:
            raise UsageError(f"invalid synthetic backend: {exc}") from exc
    raise UsageError(f"unknown backend kind {kind!r}")


def build_parse_provider(settings: dict[str, object]) -> ParseProvider | None:
    kind = settings.get("parse", "heuristic")
    if kind == "none":
        return None
    if kind == "heuristic":
        return HeuristicParseProvider()
    if kind == "remote":
        url = settings.get("parse_url")
        if not url:
            raise UsageError("parse 'remote' needs parse_url")
        timeout = float(settings.get("timeout", 60.0))
        return FallbackParseProvider(RemoteParseProvider(str(url), timeout=timeout))
    raise UsageError(f"unknown parse provider {kind!r}")


def build_entailment(settings: dict[str, object]):
    kind = settings.get("entailment", "exact_match")
    if kind == "exact_match":
        return ExactMatchEntailment()
    if kind == "remote":
        url = settings.get("entail_url")
        if not url:
            raise UsageError("entailment 'remote' needs entail_url")
        return RemoteEntailment(str(url))
    raise UsageError(f"unknown entailment predicate {kind!r}")


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n"


def _process_document(
    record: DatasetRecord,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    parse_provider: ParseProvider | None,
    entailment,
) -> tuple[dict, EvalRecord | None, str | None]:
    """Run one document. Returns (output line, eval record or None, stop reason
    or None); generation failures come back as error lines."""
    try:
        trace = generate(
            clean_article(record.article),
            cfg,
            backend,
            parse_provider=parse_provider,
            entailment=entailment,
            document_id=record.id,
        )
    except SampleSelectError as exc:
        return (
            {"id": record.id, "method": cfg.method.value, "error": str(exc)},
            None,
            None,
        )
    summary = trace.summary(cfg.sentence_joiner)
    f1 = rouge1_f1(summary, record.reference) if record.reference is not None else None
    ev = EvalRecord(record.id, f1, summary_length_tokens(summary))
    line = {
        "id": record.id,
        "method": cfg.method.value,
        "summary": summary,
        "stop_reason": trace.stop_reason.value if trace.stop_reason else None,
        "rounds": [r.to_dict() for r in trace.rounds],
        "eval": {"rouge1_f1": ev.rouge1_f1, "length_tokens": ev.length_tokens},
    }
    if cfg.method is Method.SCRR:
        line["entailment"] = entailment.name if entailment else ExactMatchEntailment.name
    if cfg.method is Method.SELFCHECK_SELECT:
        line["aggregate"] = cfg.selfcheck_aggregate
    return line, ev, trace.stop_reason.value if trace.stop_reason else None


def _preflight(cfg: GenerationConfig, backend: SamplingBackend) -> None:
    """Reject method/backend mismatches before any sampling."""
    from sampleselect.backends import DistributionBackend

    if cfg.method is Method.PCRR and not backend.supports_logprobs:
        raise UsageError("pcrr needs a backend reporting token log-probabilities")
    if cfg.method is Method.BEAM and not isinstance(backend, DistributionBackend):
        raise UsageError("beam search needs a distribution backend")
    if cfg.method in (Method.SELFCHECK_SELECT, Method.PCRR, Method.SCRR) and cfg.n < 2:
        raise UsageError(f"method {cfg.method.value} needs n >= 2")


def cmd_run(args: argparse.Namespace) -> int:
    settings: dict[str, object] = {}
    if args.config:
        settings.update(load_config_file(args.config))
    settings.update(_flag_overrides(args))

    records = load_dataset(args.dataset)
    cfg = build_generation_config(settings)
    backend = build_backend(settings)
    parse_provider = build_parse_provider(settings)
    entailment = build_entailment(settings)
    _preflight(cfg, backend)
    workers = int(settings.get("workers", 1))
    if workers < 1:
        raise UsageError("workers must be >= 1")

    eval_records: list[EvalRecord] = []
    stop_reasons: Counter[str] = Counter()
    failures = 0

    output_path = Path(args.output)
    with output_path.open("w", encoding="utf-8") as out:
        if workers == 1:
            for record in records:
                line, ev, stop = _process_document(record, cfg, backend, parse_provider, entailment)
                failures += _collect(line, ev, stop, eval_records, stop_reasons, out)
        else:
            # Lines are written in completion order; each is self-identifying.
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_process_document, record, cfg, backend, parse_provider, entailment)
                    for record in records
                ]
                for future in as_completed(futures):
                    line, ev, stop = future.result()
                    failures += _collect(line, ev, stop, eval_records, stop_reasons, out)

    report_path = Path(args.report) if args.report else output_path.with_suffix(
        output_path.suffix + ".report.json"
    )
    _write_report(report_path, cfg, eval_records, stop_reasons)
    return 2 if failures else 0


def _collect(
    line: dict,
    ev: EvalRecord | None,
    stop: str | None,
    eval_records: list[EvalRecord],
    stop_reasons: Counter,
    out: TextIO,
) -> int:
    out.write(_dump_line(line))
    if ev is None:
        print(f"document {line['id']} failed: {line.get('error')}", file=sys.stderr)
        return 1
    eval_records.append(ev)
    if stop:
        stop_reasons[stop] += 1
    return 0


def _write_report(
    path: Path,
    cfg: GenerationConfig,
    eval_records: Sequence[EvalRecord],
    stop_reasons: Counter,
) -> None:
    header = {"generated_at": datetime.now(timezone.utc).isoformat()}
    if eval_records:
        body = aggregate_report(eval_records, method=cfg.method.value, stop_reasons=stop_reasons)
    else:  # every document failed; keep the report parseable
        body = {
            "method": cfg.method.value,
            "n_docs": 0,
            "rouge1_f1_mean": None,
            "rouge1_f1_count": 0,
            "length_mean": None,
            "stop_reasons": {},
        }
    path.write_text(
        json.dumps({"header": header, **body}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def _flag_overrides(args: argparse.Namespace) -> dict[str, object]:
    mapping = {
        "method": args.method,
        "n": args.n,
        "top_p": args.top_p,
        "temperature": args.temperature,
        "seed": args.seed,
        "max_sentence_tokens": args.max_sentence_tokens,
        "max_sentences": args.max_sentences,
        "beams": args.beams,
        "prompt_template_file": args.prompt_template_file,
        "backend": args.backend,
        "backend_url": args.backend_url,
        "backend_script": args.backend_script,
        "parse_url": args.parse_url,
        "workers": args.workers,
        "retries": args.retries,
        "timeout": args.timeout,
    }
    overrides = {key: value for key, value in mapping.items() if value is not None}
    if args.parse_url is not None:
        overrides.setdefault("parse", "remote")
    return overrides


# --- replay -----------------------------------------------------------------

def _expected_round_scores(
    method: str, round_data: dict, aggregate: str
) -> tuple[list[float], int | None] | None:
    """Recompute scores and the chosen index for one persisted round.

    Returns None when this method's rounds cannot be rescored offline (scrr
    with a non-builtin predicate).
    """
    candidates = round_data["candidates"]
    token_lists = [tuple(c["tokens"]) for c in candidates]
    filtered = [bool(c["filtered"]) for c in candidates]
    lower_is_better = False
    if method in (Method.SAMPLE_SELECT.value, Method.INDEPENDENT.value):
        raw = round_overlap_scores(token_lists)
    elif method == Method.SELFCHECK_SELECT.value:
        raw = round_unigram_nll_scores(token_lists, aggregate=aggregate)
        lower_is_better = True
    elif method == Method.PCRR.value:
        raw = [
            mean_logprob(c["token_logprobs"]) if c.get("token_logprobs") else None
            for c in candidates
        ]
    elif method == Method.SCRR.value:
        predicate = ExactMatchEntailment()
        texts = [c["text"] for c in candidates]
        raw = [float(agreement_score(i, texts, predicate)) for i in range(len(texts))]
    else:
        return None
    scores: list[float] = []
    chosen: int | None = None
    best: float | None = None
    for i in range(len(candidates)):
        if filtered[i] or raw[i] is None:
            scores.append(0.0)
            continue
        scores.append(raw[i])
        if best is None or (raw[i] < best if lower_is_better else raw[i] > best):
            best, chosen = raw[i], i
    return scores, chosen


def _verify_line(line: dict, lineno: int) -> list[str]:
    mismatches: list[str] = []
    method = line.get("method")
    doc_id = line.get("id", f"line {lineno}")
    if method == Method.SCRR.value and line.get("entailment") != ExactMatchEntailment.name:
        print(
            f"note: {doc_id}: skipping scrr rescoring (predicate {line.get('entailment')!r} "
            "is not available offline)",
            file=sys.stderr,
        )
        return mismatches
    aggregate = line.get("aggregate", "mean")
    for round_data in line.get("rounds", []):
        result = _expected_round_scores(method, round_data, aggregate)
        if result is None:
            continue
        expected_scores, expected_chosen = result
        idx = round_data["round_index"]
        for i, candidate in enumerate(round_data["candidates"]):
            recomputed = word_tokens(candidate["text"])
            if list(candidate["tokens"]) != recomputed:
                mismatches.append(
                    f"{doc_id} round {idx} candidate {i}: stored tokens "
                    f"{candidate['tokens']} != recomputed {recomputed}"
                )
            if candidate["score"] != expected_scores[i]:
                mismatches.append(
                    f"{doc_id} round {idx} candidate {i}: stored score "
                    f"{candidate['score']} != recomputed {expected_scores[i]}"
                )
        if round_data["chosen"] != expected_chosen:
            mismatches.append(
                f"{doc_id} round {idx}: stored chosen {round_data['chosen']} "
                f"!= recomputed {expected_chosen}"
            )
    return mismatches


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        text = Path(args.trace).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc}") from exc
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise UsageError(f"trace {args.trace} is empty")
    mismatches: list[str] = []
    verified = 0
    for lineno, line in enumerate(lines, start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.trace}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict) or "method" not in obj:
            raise UsageError(f"{args.trace}:{lineno}: not a trace line")
        if "error" in obj:
            continue
        if "rounds" not in obj:
            raise UsageError(f"{args.trace}:{lineno}: trace line missing 'rounds'")
        mismatches.extend(_verify_line(obj, lineno))
        verified += 1
    for mismatch in mismatches:
        print(f"MISMATCH: {mismatch}")
    print(f"replay: {verified} documents checked, {len(mismatches)} mismatches")
    return 2 if mismatches else 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sampleselect",
        description="Sentence-level self-consistency decoding over pluggable backends.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="summarize a dataset and persist traces")
    run.add_argument("dataset", help="JSONL file of {'id', 'article', 'reference'?}")
    run.add_argument("--config", help="key = value configuration file")
    run.add_argument("-o", "--output", required=True, help="output JSONL path")
    run.add_argument("--report", help="report JSON path (default: <output>.report.json)")
    run.add_argument("--method", choices=[m.value for m in Method])
    run.add_argument("--n", type=int)
    run.add_argument("--top-p", dest="top_p", type=float)
    run.add_argument("--temperature", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--max-sentence-tokens", dest="max_sentence_tokens", type=int)
    run.add_argument("--max-sentences", dest="max_sentences", type=int)
    run.add_argument("--beams", type=int)
    run.add_argument("--prompt-template-file", dest="prompt_template_file")
    run.add_argument("--backend", choices=["remote", "scripted", "random", "synthetic"])
    run.add_argument("--backend-url", dest="backend_url")
    run.add_argument("--backend-script", dest="backend_script")
    run.add_argument("--parse-url", dest="parse_url")
    run.add_argument("--workers", type=int)
    run.add_argument("--retries", type=int)
    run.add_argument("--timeout", type=float)
    run.set_defaults(func=cmd_run)

    replay = sub.add_parser("replay", help="verify the scores recorded in a trace file")
    replay.add_argument("trace", help="output JSONL produced by 'run'")
    replay.set_defaults(func=cmd_replay)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
