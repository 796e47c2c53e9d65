"""
cli/commands.py
Subcommands: synth, split, stats, train, few-shot, eval, generate, gradcheck,
ablate, compare.

Every command raises SovMasError subclasses on bad input; `main` turns them
into a one-line message and exit code 1. Outputs are staged under temporary
names and renamed into place only after the command succeeds.
"""
import argparse
import json
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from cli.manifest import CONFIG_NAME, RunManifest
from config.loader import RunConfig, load_run_config
from config.settings import settings
from monitoring import configure_logging, get_logger
from tensor_core import InvalidInputError, SovMasError

log = get_logger(__name__)

LANGUAGE_CODES = (
    "en", "fr", "zh", "es", "pt", "ar", "hi", "ja", "ru", "id",
    "tr", "vi", "ko", "uk", "bn", "sw", "my", "th", "fa", "ur",
)
GRADCHECK_TOLERANCE = {64: 1e-5, 32: 1e-3}
GRADCHECK_EPS = {64: 1e-5, 32: 1e-3}


# ── Helpers ──────────────────────────────────────────────────────────────────

def _seed(value: Optional[int]) -> int:
    return settings.seed if value is None else value


def _csv_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _csv_strs(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _tier_map(text: Optional[str]) -> dict[str, str]:
    """"en=mid-high,fr=zero" -> {"en": "mid-high", "fr": "zero"}."""
    out: dict[str, str] = {}
    for part in _csv_strs(text or ""):
        lang, sep, tier = part.partition("=")
        if not sep:
            raise InvalidInputError(f"tier assignment {part!r} must look like lang=tier")
        out[lang.strip()] = tier.strip()
    return out


@contextmanager
def staged_dir(final: Path) -> Iterator[Path]:
    """Yield a temp directory next to `final`; rename it to `final` on success."""
    final = Path(final)
    if final.exists() and any(final.iterdir()):
        raise InvalidInputError(f"output directory already exists and is not empty: {final}")
    final.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=final.parent, prefix=f".{final.name}.", suffix=".tmp"))
    try:
        yield tmp
        if final.exists():
            final.rmdir()
        tmp.rename(final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise


def _console():
    from rich.console import Console
    return Console()


def _table(title: str, columns: Sequence[str]):
    from rich import box
    from rich.table import Table
    table = Table(title=title, box=box.ROUNDED)
    for i, col in enumerate(columns):
        table.add_column(col, style="cyan" if i == 0 else None, justify="left" if i == 0 else "right")
    return table


def _load_vocab(manifest: Path, vocab_size: int):
    from dataio import Vocabulary, vocab_path
    path = vocab_path(manifest)
    return Vocabulary.load(path) if path.exists() else Vocabulary.numeric(vocab_size)


def _load_model(run: RunConfig, checkpoint: Path):
    from model import SovMasModel
    from tensor_core import load_checkpoint
    params, _ = load_checkpoint(checkpoint)
    model = SovMasModel(run.model)
    model.load_state_dict(params)
    model.eval()
    return model


def _run_config_for(checkpoint: Path, config: Optional[Path]) -> RunConfig:
    """An explicit --config, else the resolved config stored beside the checkpoint."""
    path = Path(config) if config is not None else Path(checkpoint).parent / CONFIG_NAME
    return load_run_config(path)


def _select(corpus, split_path: Optional[Path], part: str):
    from dataio import CorpusSplit
    if split_path is None:
        return list(corpus.examples)
    split = CorpusSplit.load(split_path)
    return corpus.subset(getattr(split, part)).examples


# ── Dataset statistics ───────────────────────────────────────────────────────

@dataclass
class LanguageStats:
    language:    str
    tier:        str
    samples:     int
    images:      int
    avg_article: float
    avg_summary: float


def corpus_stats(corpus, tiers: Optional[Mapping[str, str]] = None) -> tuple[list[LanguageStats], dict[str, float]]:
    rows: list[LanguageStats] = []
    for lang, examples in corpus.by_language().items():
        rows.append(LanguageStats(
            language=lang,
            tier=(tiers or {}).get(lang, "-"),
            samples=len(examples),
            images=sum(ex.image_count for ex in examples),
            avg_article=float(np.mean([ex.article_ids.size for ex in examples])),
            avg_summary=float(np.mean([ex.summary_ids.size for ex in examples])),
        ))
    total_samples = sum(r.samples for r in rows)
    total_images = sum(r.images for r in rows)
    totals = {
        "Total Samples": total_samples,
        "Total Images": total_images,
        "Avg. of Images": total_images / total_samples if total_samples else 0.0,
        "Num. of Lang.": len(rows),
    }
    return rows, totals


def _print_stats(corpus, tiers: Optional[Mapping[str, str]] = None) -> None:
    rows, totals = corpus_stats(corpus, tiers)
    table = _table("Dataset statistics", ["Language", "Tier", "#Samples", "#Images", "Avg. Article", "Avg. Summary"])
    for r in rows:
        table.add_row(r.language, r.tier, str(r.samples), str(r.images), f"{r.avg_article:.2f}", f"{r.avg_summary:.2f}")
    table.add_section()
    for key, value in totals.items():
        table.add_row(f"[bold]{key}[/bold]", "", f"{value:.2f}" if isinstance(value, float) else str(value), "", "", "")
    _console().print(table)


def _print_rouge(table_data, title: str) -> None:
    from rouge_eval import METRICS
    table = _table(title, ["Language", "R-1", "R-2", "R-L"])
    for lang, row in table_data.rows.items():
        if lang == "Avg.":
            table.add_section()
        table.add_row(lang, *[f"{row[m]:.2f}" for m in METRICS])
    _console().print(table)


# ── Subcommands ──────────────────────────────────────────────────────────────

def cmd_synth(args: argparse.Namespace) -> None:
    from dataio import SynthSpec, synth_corpus, synth_vocabulary, write_corpus

    sizes = _csv_ints(args.sizes)
    languages = _csv_strs(args.languages) if args.languages else list(LANGUAGE_CODES[: args.langs])
    if args.langs is not None and not args.languages and args.langs > len(LANGUAGE_CODES):
        raise InvalidInputError(f"--langs supports at most {len(LANGUAGE_CODES)} generated codes; pass --languages")
    try:
        spec = SynthSpec(
            languages=languages, sizes=sizes, vocab_size=args.vocab_size, classes=args.classes,
            n_images=args.n_images, regions_per_image=args.regions, d_v=args.d_v,
            informativeness=args.informativeness,
        )
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc
    corpus = synth_corpus(_seed(args.seed), spec)
    try:
        write_corpus(corpus, Path(args.out), vocab=synth_vocabulary(spec))
    except OSError as exc:
        raise InvalidInputError(f"cannot write corpus to {args.out}: {exc}") from exc
    _print_stats(corpus)


def cmd_stats(args: argparse.Namespace) -> None:
    from dataio import load_corpus
    _print_stats(load_corpus(Path(args.corpus)), _tier_map(args.tiers))


def cmd_split(args: argparse.Namespace) -> None:
    from dataio import load_corpus, split_corpus, split_ids

    seed = _seed(args.seed)
    ratios = tuple(float(x) for x in _csv_strs(args.ratios)) if args.ratios else (0.8, 0.1, 0.1)
    if len(ratios) != 3:
        raise InvalidInputError(f"--ratios needs three values, got {args.ratios}")
    if args.corpus:
        corpus = load_corpus(Path(args.corpus))
        tiers = _tier_map(args.tiers) or args.tier
        split = split_corpus(corpus, tiers, seed, ratios)
    elif args.n is not None:
        split = split_ids([f"ex-{i:06d}" for i in range(args.n)], args.tier, seed, ratios)
    else:
        raise InvalidInputError("split needs --corpus or --n")
    split.save(Path(args.out))

    table = _table(f"Split ({args.tier if not args.tiers else args.tiers})", ["Part", "Examples"])
    for part, count in split.sizes().items():
        table.add_row(part, str(count))
    _console().print(table)


def _train_overrides(args: argparse.Namespace) -> dict:
    keys = ("preset", "mode", "alpha", "beta", "mask_mode", "steps", "batch_size", "seed", "precision")
    out = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "languages", None):
        out["languages"] = args.languages
    return out


def _pools(corpus, ids: Sequence[str], languages: Optional[Sequence[str]] = None) -> dict:
    pools: dict[str, list] = {}
    for ex in corpus.subset(list(ids)).examples:
        if languages and ex.language not in languages:
            continue
        pools.setdefault(ex.language, []).append(ex)
    return pools


def cmd_train(args: argparse.Namespace) -> None:
    from dataio import CorpusSplit, load_corpus, split_corpus
    from model import SovMasModel
    from trainer import Trainer

    run = load_run_config(Path(args.config) if args.config else None, _train_overrides(args))
    corpus = load_corpus(Path(args.corpus), vocab_size=run.model.vocab_size)
    split = CorpusSplit.load(Path(args.split)) if args.split else split_corpus(corpus, "mid-high", run.train.seed)
    languages = run.train.languages or corpus.languages()
    pools = _pools(corpus, split.train, languages)
    validation = [ex for ex in corpus.subset(split.validation).examples if ex.language in languages]

    out = Path(args.out) if args.out else settings.output_dir / f"train-seed{run.train.seed}"
    with staged_dir(out) as tmp:
        run.write(tmp / CONFIG_NAME)
        model = SovMasModel(run.model)
        result = Trainer(model, run.train, tmp).train(pools, validation or None)
        RunManifest(
            command="train", config_path=args.config, config=run.snapshot(),
            seed=run.train.seed, output_dir=str(out),
        ).hash_artifacts(tmp).write(tmp)

    table = _table("Training finished", ["Field", "Value"])
    last = next((r for r in reversed(result.metrics.steps) if r.status == "ok"), None)
    table.add_row("steps", str(result.step))
    table.add_row("run dir", str(out))
    if last is not None:
        for key in ("l_mas", "l_vis2sum", "l_mim", "j"):
            value = getattr(last, key)
            table.add_row(key, "-" if value is None else f"{value:.4f}")
    if result.best_score is not None:
        table.add_row("best validation score", f"{result.best_score:.2f}")
    _console().print(table)


def cmd_few_shot(args: argparse.Namespace) -> None:
    from dataio import CorpusSplit, load_corpus
    from trainer import few_shot_continue

    run = _run_config_for(Path(args.checkpoint), Path(args.config) if args.config else None)
    corpus = load_corpus(Path(args.corpus), vocab_size=run.model.vocab_size)
    split = CorpusSplit.load(Path(args.split))
    pools = _pools(corpus, split.few_shot)
    out = Path(args.out)
    with staged_dir(out) as tmp:
        run.write(tmp / CONFIG_NAME)
        few_shot_continue(Path(args.checkpoint), run.model, pools, args.steps, run.train, tmp)
        RunManifest(
            command="few-shot", config_path=args.config, config=run.snapshot(),
            seed=run.train.seed, output_dir=str(out),
        ).hash_artifacts(tmp).write(tmp)
    _console().print(f"[green]Few-shot checkpoint written to {out}[/green]")


def cmd_eval(args: argparse.Namespace) -> None:
    from dataio import load_corpus
    from trainer import evaluate

    run = _run_config_for(Path(args.checkpoint), Path(args.config) if args.config else None)
    model = _load_model(run, Path(args.checkpoint))
    corpus = load_corpus(Path(args.corpus), vocab_size=run.model.vocab_size)
    examples = _select(corpus, Path(args.split) if args.split else None, args.part)
    vocab = _load_vocab(Path(args.corpus), run.model.vocab_size)
    table = evaluate(model, examples, beam=args.beam, length_penalty=args.length_penalty,
                     vocab=vocab, split=args.part, path=args.path)
    if args.out:
        table.write_tsv(Path(args.out))
    _print_rouge(table, f"ROUGE ({args.part}, beam {args.beam}, γ={args.length_penalty})")


def cmd_generate(args: argparse.Namespace) -> None:
    from dataio import load_corpus
    from tensor_core.checkpoint import atomic_write_bytes
    from trainer import decode_examples

    run = _run_config_for(Path(args.checkpoint), Path(args.config) if args.config else None)
    model = _load_model(run, Path(args.checkpoint))
    corpus = load_corpus(Path(args.corpus), vocab_size=run.model.vocab_size)
    examples = _select(corpus, Path(args.split) if args.split else None, args.part)
    vocab = _load_vocab(Path(args.corpus), run.model.vocab_size)

    lines: list[str] = []
    by_language: dict[str, list] = {}
    for ex in examples:
        by_language.setdefault(ex.language, []).append(ex)
    for lang, pool in by_language.items():
        outputs = decode_examples(model, pool, args.beam, args.length_penalty, args.path)
        for ex, tokens in zip(pool, outputs):
            lines.append(json.dumps({
                "id": ex.id, "lang": lang, "tokens": tokens, "text": vocab.detokenize(tokens),
            }, ensure_ascii=False))
    atomic_write_bytes(Path(args.out), ("\n".join(lines) + "\n").encode("utf-8"))
    _console().print(f"[green]{len(lines)} summaries written to {args.out}[/green]")


def gradcheck_model(precision: int = 64, seed: int = 0, max_entries: int = 8):
    """
    Finite-difference check of the joint objective (all three forward paths)
    on the tiny reference configuration.
    """
    from dataio import SynthSpec, make_batch, synth_corpus
    from model import TINY_MODEL, SovMasModel
    from objectives import LossWeights, joint_mono, loss_mas, loss_mim, loss_vis2sum, mask_one_image, mim_targets
    from tensor_core import grad_check_report

    config = TINY_MODEL.model_copy(update={"precision": precision, "init_seed": seed})
    spec = SynthSpec(
        languages=["en"], sizes=[2], vocab_size=config.vocab_size, classes=config.detector_classes,
        n_images=config.n_images, regions_per_image=config.regions_per_image, d_v=config.d_v,
        article_filler=(3, 6),
    )
    batch = make_batch(synth_corpus(seed, spec).examples, config)
    masked, plan = mask_one_image(batch, np.random.default_rng(seed), config.regions_per_image)
    model = SovMasModel(config)
    weights = LossWeights()
    smoothing = config.label_smoothing

    def build_loss():
        return joint_mono(
            loss_mas(model.forward_mas(batch), batch.target_ids, smoothing),
            loss_vis2sum(model.forward_vis2sum(batch), batch.target_ids, smoothing),
            loss_mim(model.forward_mim(masked, plan), mim_targets(batch.q, plan), plan),
            weights,
        )

    return grad_check_report(build_loss, model.named_parameters(), eps=GRADCHECK_EPS[precision],
                             max_entries=max_entries, seed=seed)


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = gradcheck_model(args.precision, _seed(args.seed), args.max_entries)
    tolerance = args.tolerance if args.tolerance is not None else GRADCHECK_TOLERANCE[args.precision]
    passed = report.max_rel_error < tolerance
    table = _table(f"Gradient check ({args.precision}-bit)", ["Field", "Value"])
    table.add_row("max relative error", f"{report.max_rel_error:.3e}")
    table.add_row("worst parameter", report.worst_parameter)
    table.add_row("entries checked", str(report.checked_entries))
    table.add_row("tolerance", f"{tolerance:.0e}")
    table.add_row("result", "[green]PASSED[/green]" if passed else "[red]FAILED[/red]")
    _console().print(table)
    return 0 if passed else 1


def cmd_ablate(args: argparse.Namespace) -> None:
    from dataio import CorpusSplit, load_corpus, split_corpus
    from trainer import run_ablation

    run = load_run_config(Path(args.config) if args.config else None, _train_overrides(args))
    corpus = load_corpus(Path(args.corpus), vocab_size=run.model.vocab_size)
    split = CorpusSplit.load(Path(args.split)) if args.split else split_corpus(corpus, "mid-high", run.train.seed)
    languages = run.train.languages or corpus.languages()
    pools = _pools(corpus, split.train, languages)
    test = [ex for ex in corpus.subset(split.test).examples if ex.language in languages]

    out = Path(args.out)
    with staged_dir(out) as tmp:
        run.write(tmp / CONFIG_NAME)
        result = run_ablation(run.model, run.train, pools, test, seeds=_csv_ints(args.seeds),
                              rows=_csv_ints(args.rows), run_dir=tmp)
        result.write_tsv(tmp / "ablation.tsv")
        RunManifest(
            command="ablate", config_path=args.config, config=run.snapshot(),
            seed=run.train.seed, output_dir=str(out),
        ).hash_artifacts(tmp).write(tmp)

    table = _table("Ablation (mean over seeds)", ["Row", "Configuration", "R-1", "R-2", "R-L"])
    for r in result.rows:
        table.add_row(str(r.row), r.label, *[f"{v:.2f}" for v in r.scores.values()])
    _console().print(table)


def _read_generations(path: Path) -> dict[str, dict]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"generation file not found: {path}")
    out: dict[str, dict] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            out[record["id"]] = record
    return out


def cmd_compare(args: argparse.Namespace) -> None:
    from dataio import Vocabulary, load_corpus, vocab_path
    from rouge_eval import METRICS, paired_significance, score_all
    from tensor_core.checkpoint import atomic_write_bytes
    from trainer import to_rouge_tokens

    corpus = load_corpus(Path(args.corpus))
    index = {ex.id: ex for ex in corpus.examples}
    gen_a, gen_b = _read_generations(Path(args.a)), _read_generations(Path(args.b))
    ids = [i for i in gen_a if i in gen_b]
    if len(ids) < 2:
        raise InvalidInputError(f"need at least 2 shared example ids, got {len(ids)}")
    vocab = Vocabulary.load(vocab_path(Path(args.corpus))) if vocab_path(Path(args.corpus)).exists() else None

    scores_a: dict[str, list[float]] = {m: [] for m in METRICS}
    scores_b: dict[str, list[float]] = {m: [] for m in METRICS}
    for i in ids:
        if i not in index:
            raise InvalidInputError(f"example {i!r} is not in {args.corpus}")
        ex = index[i]
        ref = to_rouge_tokens(list(ex.summary_ids), vocab)
        for gen, bucket in ((gen_a, scores_a), (gen_b, scores_b)):
            for m, s in score_all(to_rouge_tokens(gen[i]["tokens"], vocab), ref).items():
                bucket[m].append(s.f1)

    reports = [
        paired_significance(scores_a[m], scores_b[m], args.resamples, _seed(args.seed), metric=m)
        for m in METRICS
    ]
    payload = "\n".join(r.model_dump_json() for r in reports) + "\n"
    if args.out:
        atomic_write_bytes(Path(args.out), payload.encode("utf-8"))
    table = _table(f"Paired bootstrap ({len(ids)} examples)", ["Metric", "mean(A-B)", "p-value"])
    for r in reports:
        table.add_row(r.metric, f"{100 * r.mean_difference:+.2f}", f"{r.p_value:.4f}")
    _console().print(table)


# ── Parser ───────────────────────────────────────────────────────────────────

def _add_decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", help="run config (default: config.txt beside the checkpoint)")
    p.add_argument("--corpus", required=True, help="manifest .jsonl")
    p.add_argument("--split", help="split JSON; default: the whole corpus")
    p.add_argument("--part", default="test", choices=["train", "validation", "test", "few_shot"])
    p.add_argument("--beam", type=int, default=4)
    p.add_argument("--length-penalty", type=float, default=0.6)
    p.add_argument("--path", default="mas", choices=["mas", "vis2sum"])


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value run configuration file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split")
    p.add_argument("--preset", choices=["full", "desk", "tiny"])
    p.add_argument("--mode", choices=["mono", "multi"])
    p.add_argument("--languages", help="comma-separated language codes")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--mask-mode", dest="mask_mode", choices=["mim", "mrm", "off"])
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--precision", type=int, choices=[32, 64])
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sovmas", description="Vision-guided multimodal summarization toolkit")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--langs", type=int, default=3)
    p.add_argument("--languages", help="explicit comma-separated codes (overrides --langs)")
    p.add_argument("--sizes", default="200,100,50")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="manifest path, e.g. data/synth.jsonl")
    p.add_argument("--vocab-size", type=int, default=512)
    p.add_argument("--classes", type=int, default=16)
    p.add_argument("--n-images", type=int, default=3)
    p.add_argument("--regions", type=int, default=4)
    p.add_argument("--d-v", type=int, default=32)
    p.add_argument("--informativeness", type=float, default=1.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="dataset statistics table")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tiers", help="lang=tier pairs, comma-separated")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="train/validation/test (and few-shot) split")
    p.add_argument("--corpus")
    p.add_argument("--n", type=int, help="split N synthetic ids instead of a corpus")
    p.add_argument("--tier", default="mid-high", choices=["mid-high", "low", "zero"])
    p.add_argument("--tiers", help="per-language lang=tier pairs (corpus only)")
    p.add_argument("--ratios", help="train,validation,test fractions")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="joint training run")
    _add_train_flags(p)
    p.add_argument("--out", help="run directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("few-shot", help="continue a checkpoint on the few-shot pools")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--steps", type=int, default=3000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_few_shot)

    p = sub.add_parser("eval", help="ROUGE table for a split")
    _add_decode_flags(p)
    p.add_argument("--out", help="TSV output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="write candidate summaries")
    _add_decode_flags(p)
    p.add_argument("--out", required=True, help="JSON Lines output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("gradcheck", help="finite-difference check on the tiny model")
    p.add_argument("--precision", type=int, default=64, choices=[32, 64])
    p.add_argument("--seed", type=int)
    p.add_argument("--max-entries", type=int, default=8)
    p.add_argument("--tolerance", type=float)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ablate", help="auxiliary-objective ablation over seeds")
    _add_train_flags(p)
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--rows", default="0,1,2,3,4")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("compare", help="paired bootstrap between two generation files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.log_level:
        configure_logging(args.log_level)
    try:
        code = args.func(args)
    except (SovMasError, ValidationError, OSError) as exc:
        log.error("Command failed", command=args.command, error=str(exc))
        _console().print(f"[red]error:[/red] {exc}")
        return 1
    return code if isinstance(code, int) else 0
