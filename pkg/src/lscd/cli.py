"""Command-line pipeline driver.

Subcommands map onto the library modules: train / align / grade / tune /
discover run the change-detection pipeline, cluster / label work on
usage graphs, evaluate scores predictions, serve starts the annotation
service, sample-population draws the stratified candidate sample.

Every subcommand accepts --config FILE with flat key=value lines whose
keys are the long flag names with dashes replaced by underscores;
explicit CLI flags override config values.  Commands that write into an
output directory also write a manifest.json recording the resolved
configuration, and remove partial outputs when they fail.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__
from .align import identity_pair, normalize_and_center, orthogonal_procrustes
from .corpus import Period, build_vocabulary, load_corpus, make_wordlist_language_check
from .discovery import (
    GradedRanking,
    Population,
    TokenBackend,
    TypeBackend,
    discover,
    full_population,
    grade_population,
    sample_population,
    threshold_grid,
    tune_threshold,
    write_report,
)
from .metrics import EvalResult, fbeta_score, precision_recall_fbeta, spearman_rho
from .static_embed import SgnsConfig, load_space, save_space, train_sgns
from .token_embed import load_usage_vectors
from .wug import (
    SolverConfig,
    WUG,
    change_labels,
    cluster_wug,
    normalized_loss,
    read_clusters_tsv,
    read_judgments_tsv,
    write_clusters_tsv,
)
from .corpus import read_usages_tsv


def _read_lemma_list(path: str) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip()]


def _read_gold(path: str) -> dict[str, bool]:
    gold = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'lemma<TAB>label'")
        label = parts[1].strip().lower()
        if label in ("1", "true", "yes"):
            gold[parts[0]] = True
        elif label in ("0", "false", "no"):
            gold[parts[0]] = False
        else:
            raise ValueError(f"{path}:{lineno}: unrecognized label {parts[1]!r}")
    return gold


def _read_scores(path: str) -> dict[str, float]:
    scores = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'lemma<TAB>score'")
        scores[parts[0]] = float(parts[1])
    return scores


def _write_scores(scores: dict[str, float], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lemma, score in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
            fh.write(f"{lemma}\t{score:.6f}\n")


@contextmanager
def _removing_on_error(created: list[Path]):
    # `created` is appended to while the command runs; on failure every
    # registered partial output is removed before the error propagates
    try:
        yield
    except BaseException:
        for p in created:
            Path(p).unlink(missing_ok=True)
        raise


def _write_manifest(out_dir: Path, args: argparse.Namespace, created: list[Path]) -> None:
    config = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func", "config") and not k.startswith("_")
    }
    manifest = {"tool_version": __version__, "command": args._command, "config": config}
    path = out_dir / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    created.append(path)


def _sgns_config(args: argparse.Namespace, seed: int) -> SgnsConfig:
    return SgnsConfig(
        dim=args.dim, window=args.window, negative=args.negative,
        subsample=args.subsample or None, epochs=args.epochs,
        min_count=args.min_count, lr=args.lr, workers=args.workers, seed=seed,
    )


def _add_sgns_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=300, help="embedding dimensionality")
    p.add_argument("--window", type=int, default=10, help="maximum context window size")
    p.add_argument("--negative", type=int, default=5, help="negative samples per pair")
    p.add_argument("--subsample", type=float, default=1e-3,
                   help="frequency subsampling rate (0 disables)")
    p.add_argument("--epochs", type=int, default=5, help="training passes over the corpus")
    p.add_argument("--min-count", type=int, default=39, help="minimum lemma frequency")
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate")
    p.add_argument("--workers", type=int, default=1,
                   help="training shards (1 = deterministic)")


# -- subcommands --------------------------------------------------------


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus, Period(args.period))
    space = train_sgns(corpus, _sgns_config(args, args.seed))
    created: list[Path] = []
    with _removing_on_error(created):
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        created += [out, Path(f"{out}.meta.json")]
        save_space(space, out)
    print(f"trained {len(space)} vectors (dim {space.dim}) from {corpus.token_count} tokens"
          f" -> {args.out}")
    return 0


def cmd_align(args) -> int:
    space1 = normalize_and_center(load_space(args.space1, period=Period.C1))
    space2 = normalize_and_center(load_space(args.space2, period=Period.C2))
    aligned = orthogonal_procrustes(space1, space2)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    with _removing_on_error(created):
        p1, p2 = out_dir / "aligned_c1.txt", out_dir / "aligned_c2.txt"
        rot = out_dir / "rotation.txt"
        created += [p1, Path(f"{p1}.meta.json"), p2, Path(f"{p2}.meta.json"), rot]
        save_space(aligned.space1, p1)
        save_space(aligned.space2, p2)
        np.savetxt(rot, aligned.rotation_W)
        _write_manifest(out_dir, args, created)
    print(f"aligned on {len(aligned.shared_words)} shared words -> {out_dir}")
    return 0


def _token_backend(args) -> TokenBackend:
    sets: dict[str, dict[Period, object]] = {}
    for path in sorted(Path(args.usage_vectors).glob("*")):
        if path.is_dir():
            continue
        uset = load_usage_vectors(path)
        sets.setdefault(uset.lemma, {})[uset.period] = uset
    pairs = {
        lemma: (per[Period.C1], per[Period.C2])
        for lemma, per in sets.items()
        if Period.C1 in per and Period.C2 in per
    }
    if not pairs:
        raise ValueError(f"no lemma has usage vectors for both periods in {args.usage_vectors}")
    measure = args.measure.upper()
    return TokenBackend(pairs, measure=measure, apd_samples=args.apd_samples, seed=args.seed)


def cmd_grade(args) -> int:
    measure = args.measure.lower()
    if measure == "cd":
        if not (args.space1 and args.space2):
            raise ValueError("--measure cd needs --space1 and --space2 (aligned spaces)")
        pair = identity_pair(load_space(args.space1, period=Period.C1),
                             load_space(args.space2, period=Period.C2))
        backend = TypeBackend(pair)
        default_lemmas = list(pair.shared_words)
    else:
        if not args.usage_vectors:
            raise ValueError(f"--measure {measure} needs --usage-vectors DIR")
        backend = _token_backend(args)
        default_lemmas = sorted(backend.sets)
    lemmas = _read_lemma_list(args.lemmas) if args.lemmas else default_lemmas
    pop = Population(lemmas=tuple(sorted(lemmas)), source="full_vocabulary", seed=args.seed)
    ranking, skipped = grade_population(pop, backend)
    created: list[Path] = []
    with _removing_on_error(created):
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        created.append(out)
        _write_scores(dict(ranking.scores), out)
    for lemma, reason in sorted(skipped.items()):
        print(f"skipped {lemma}: {reason}", file=sys.stderr)
    print(f"scored {len(ranking.scores)} lemmas ({ranking.measure}) -> {args.out}")
    return 0


def cmd_tune(args) -> int:
    scores = _read_scores(args.scores)
    gold = _read_gold(args.gold)
    ranking = GradedRanking(scores=scores, measure=args.measure.upper())
    t_best, f_best = tune_threshold(ranking, gold, beta=args.beta)
    from .discovery import binarize  # local import keeps the top tidy

    for t in threshold_grid():
        pred = binarize(ranking, t)
        res = precision_recall_fbeta(pred.labels, gold, beta=args.beta)
        marker = "  <- best" if t == t_best else ""
        print(f"t={t:+.1f}  F{args.beta:g}={res.f_beta:.3f}{marker}")
    print(f"best t={t_best:+.1f} with F{args.beta:g}={f_best:.3f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"t_best": t_best, "f_best": f_best, "beta": args.beta}, fh, indent=2)
    return 0


def cmd_discover(args) -> int:
    if (args.t is None) == (args.gold is None):
        raise ValueError("exactly one of --t and --gold is required")
    c1 = load_corpus(args.corpus1, Period.C1)
    c2 = load_corpus(args.corpus2, Period.C2)

    measure = args.measure.lower()
    if measure == "cd":
        if args.space1 and args.space2:
            raw1 = load_space(args.space1, period=Period.C1)
            raw2 = load_space(args.space2, period=Period.C2)
        else:
            raw1 = train_sgns(c1, _sgns_config(args, args.seed))
            raw2 = train_sgns(c2, _sgns_config(args, args.seed + 1))
        aligned = orthogonal_procrustes(normalize_and_center(raw1), normalize_and_center(raw2))
        backend = TypeBackend(aligned)
    else:
        if not args.usage_vectors:
            raise ValueError(f"--measure {measure} needs --usage-vectors DIR")
        backend = _token_backend(args)

    exclude = set(_read_lemma_list(args.exclude)) if args.exclude else set()
    vocab = build_vocabulary(c1, c2)
    if args.population_size:
        population = sample_population(vocab, args.population_size, exclude,
                                       args.population_seed)
    else:
        population = full_population(vocab, exclude)

    language_check = None
    if args.wordlist:
        language_check = make_wordlist_language_check(_read_lemma_list(args.wordlist))

    gold = _read_gold(args.gold) if args.gold else None
    report = discover(
        c1, c2, backend, population=population, t=args.t, gold=gold,
        language_check=language_check, seed=args.seed,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    created: list[Path] = []
    with _removing_on_error(created):
        report_path = out_dir / "report.tsv"
        created.append(report_path)
        write_report(report, report_path)
        _write_manifest(out_dir, args, created)
    kept = report.predictions
    print(f"population {len(population)}; measure {report.measure}; "
          f"t={report.t_param:+.1f} (threshold {report.threshold_value:.4f}); "
          f"{len(kept)} predictions survive the filter -> {report_path}")
    return 0


def _load_wug(args) -> WUG:
    usages = read_usages_tsv(args.uses)
    if args.lemma:
        usages = [u for u in usages if u.lemma == args.lemma]
        lemma = args.lemma
    else:
        lemmas = {u.lemma for u in usages}
        if len(lemmas) != 1:
            raise ValueError(
                f"{args.uses} contains {len(lemmas)} lemmas; pick one with --lemma"
            )
        lemma = lemmas.pop()
    if not usages:
        raise ValueError(f"no usages for lemma {args.lemma!r} in {args.uses}")
    ids = {u.usage_id for u in usages}
    judgments = [
        j for j in read_judgments_tsv(args.judgments)
        if j.usage_id_1 in ids and j.usage_id_2 in ids
    ]
    wug = WUG(lemma=lemma, nodes=tuple(usages), judgments=judgments)
    wug.refresh_exclusions()
    return wug


def cmd_cluster(args) -> int:
    wug = _load_wug(args)
    config = SolverConfig(seed=args.seed, restarts=args.restarts,
                          exact_max_nodes=args.exact_max_nodes)
    clustering, loss = cluster_wug(wug, config)
    created: list[Path] = []
    with _removing_on_error(created):
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        created.append(out)
        write_clusters_tsv(clustering, out)
    wug.clustering = clustering
    print(f"{wug.lemma}: {len(set(clustering.values()))} clusters over "
          f"{len(clustering)} usages, loss {loss:.3f} "
          f"(normalized {normalized_loss(wug, clustering):.4f}) -> {args.out}")
    return 0


def cmd_label(args) -> int:
    wug = _load_wug(args)
    if args.clusters:
        clustering = read_clusters_tsv(args.clusters)
    else:
        clustering, _ = cluster_wug(wug, SolverConfig(seed=args.seed))
    result = change_labels(wug, clustering)
    payload = {
        "lemma": wug.lemma,
        "binary": result.binary,
        "graded": result.graded,
        "k": list(result.k),
        "n": list(result.n),
        "gained": sorted(result.gained),
        "lost": sorted(result.lost),
        "cluster_freqs_c1": result.cluster_freqs_c1,
        "cluster_freqs_c2": result.cluster_freqs_c2,
        "loss_normalized": result.loss_normalized,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    print(f"{wug.lemma}: binary={str(result.binary).lower()} graded={result.graded:.4f} "
          f"gained={sorted(result.gained)} lost={sorted(result.lost)}")
    return 0


def _print_table(result: EvalResult) -> None:
    rho = f"{result.rho:.3f}" if result.rho is not None else "-"
    print("rho\tF%.3g\tP\tR" % result.beta)
    print(f"{rho}\t{result.f_beta:.3f}\t{result.precision:.3f}\t{result.recall:.3f}")


def cmd_evaluate(args) -> int:
    if args.precision is not None or args.recall is not None:
        if args.precision is None or args.recall is None:
            raise ValueError("--precision and --recall must be given together")
        f = fbeta_score(args.precision, args.recall, args.beta)
        result = EvalResult(args.precision, args.recall, f, args.beta, 0, None)
        _print_table(result)
        return 0
    if not (args.pred and args.gold):
        raise ValueError("need --pred and --gold (or --precision/--recall)")
    pred = _read_gold(args.pred)
    gold = _read_gold(args.gold)
    rho = None
    if args.scores and args.graded_gold:
        scores = _read_scores(args.scores)
        graded = _read_scores(args.graded_gold)
        common = sorted(set(scores) & set(graded))
        rho = spearman_rho([scores[w] for w in common], [graded[w] for w in common])
    result = precision_recall_fbeta(pred, gold, beta=args.beta, rho=rho)
    _print_table(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({
                "rho": result.rho, "precision": result.precision,
                "recall": result.recall, "f_beta": result.f_beta,
                "beta": result.beta, "n": result.n,
            }, fh, indent=2)
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.data_dir, host=args.host, port=args.port)
    return 0


def cmd_sample_population(args) -> int:
    c1 = load_corpus(args.corpus1, Period.C1)
    c2 = load_corpus(args.corpus2, Period.C2)
    vocab = build_vocabulary(c1, c2)
    exclude = set(_read_lemma_list(args.exclude)) if args.exclude else set()
    population = sample_population(vocab, args.size, exclude, args.seed)
    created: list[Path] = []
    with _removing_on_error(created):
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        created.append(out)
        out.write_text("".join(f"{w}\n" for w in population.lemmas), encoding="utf-8")
    print(f"sampled {len(population)} lemmas -> {args.out}")
    return 0


# -- parser construction -------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lscd",
        description="Diachronic lexical semantic change discovery toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="_command", required=True, metavar="COMMAND")

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func, _command=name)
        p.add_argument("--config", help="key=value file supplying flag defaults")
        p.add_argument("--seed", type=int, default=1, help="random seed")
        return p

    p = add("train", cmd_train, "train a skip-gram space on one corpus")
    p.add_argument("--corpus", required=True, help="corpus file (tab-separated layers)")
    p.add_argument("--period", choices=["C1", "C2"], required=True)
    p.add_argument("--out", required=True, help="output vector file")
    _add_sgns_flags(p)

    p = add("align", cmd_align, "normalize, center, and Procrustes-align two spaces")
    p.add_argument("--space1", required=True, help="earlier-period vector file")
    p.add_argument("--space2", required=True, help="later-period vector file")
    p.add_argument("--out-dir", required=True)

    p = add("grade", cmd_grade, "score lemmas with a change measure")
    p.add_argument("--measure", choices=["cd", "apd", "cos"], default="cd")
    p.add_argument("--space1", help="aligned earlier-period vector file")
    p.add_argument("--space2", help="aligned later-period vector file")
    p.add_argument("--usage-vectors", help="directory of usage-vector files")
    p.add_argument("--apd-samples", type=int, default=None,
                   help="sampled-pair APD instead of the full cross product")
    p.add_argument("--lemmas", help="file with one target lemma per line")
    p.add_argument("--out", required=True, help="output scores TSV")

    p = add("tune", cmd_tune, "pick the threshold parameter t on gold labels")
    p.add_argument("--scores", required=True, help="scores TSV from grade")
    p.add_argument("--gold", required=True, help="gold binary labels TSV")
    p.add_argument("--measure", choices=["cd", "apd", "cos"], default="cd")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--out", help="optional JSON output")

    p = add("discover", cmd_discover, "full pipeline: corpora to filtered predictions")
    p.add_argument("--corpus1", required=True)
    p.add_argument("--corpus2", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--measure", choices=["cd", "apd", "cos"], default="cd")
    p.add_argument("--space1", help="pretrained space for corpus1 (skips training)")
    p.add_argument("--space2", help="pretrained space for corpus2 (skips training)")
    p.add_argument("--usage-vectors", help="directory of usage-vector files")
    p.add_argument("--apd-samples", type=int, default=None)
    p.add_argument("--t", type=float, default=None, help="fixed threshold parameter")
    p.add_argument("--gold", default=None, help="tuning gold labels TSV (instead of --t)")
    p.add_argument("--population-size", type=int, default=None,
                   help="stratified sample size (default: full intersection)")
    p.add_argument("--population-seed", type=int, default=0)
    p.add_argument("--exclude", help="file of lemmas to keep out of the population")
    p.add_argument("--wordlist", help="known-word list enabling the language filter")
    _add_sgns_flags(p)

    p = add("cluster", cmd_cluster, "correlation-cluster a usage graph")
    p.add_argument("--uses", required=True, help="uses.tsv")
    p.add_argument("--judgments", required=True, help="judgments.tsv")
    p.add_argument("--lemma", help="target lemma when uses.tsv holds several")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--exact-max-nodes", type=int, default=10)
    p.add_argument("--out", required=True, help="output clusters.tsv")

    p = add("label", cmd_label, "binary/graded change labels from a clustered graph")
    p.add_argument("--uses", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--clusters", help="clusters.tsv (default: cluster now)")
    p.add_argument("--lemma", help="target lemma when uses.tsv holds several")
    p.add_argument("--out", help="optional JSON output")

    p = add("evaluate", cmd_evaluate, "score predictions against gold labels")
    p.add_argument("--pred", help="predicted labels TSV")
    p.add_argument("--gold", help="gold labels TSV")
    p.add_argument("--scores", help="graded scores TSV (for rho)")
    p.add_argument("--graded-gold", help="gold graded values TSV (for rho)")
    p.add_argument("--precision", type=float, help="direct P (with --recall)")
    p.add_argument("--recall", type=float, help="direct R (with --precision)")
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--out", help="optional JSON output")

    p = add("serve", cmd_serve, "run the annotation HTTP service")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8750)

    p = add("sample-population", cmd_sample_population,
            "draw the frequency-stratified candidate sample")
    p.add_argument("--corpus1", required=True)
    p.add_argument("--corpus2", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--exclude", help="file of lemmas to exclude")
    p.add_argument("--out", required=True)

    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    if path is None:
        return
    # defaults must land on the invoked subparser: a subcommand parses into
    # a fresh namespace, so top-level set_defaults never reaches it
    sub_action = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    command = argv[0] if argv and not argv[0].startswith("-") else None
    target = sub_action.choices.get(command or "")
    if target is None:
        return  # argparse reports the missing or unknown command itself
    types: dict[str, object] = {}
    for action in target._actions:
        if action.dest in ("help", "func"):
            continue
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            types[action.dest] = "bool"
        else:
            types[action.dest] = action.type or str
    overrides: dict[str, object] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in types:
            raise SystemExit(f"{path}:{lineno}: unknown config key {key!r}")
        coerce = types[dest]
        if coerce == "bool":
            overrides[dest] = value.lower() in ("1", "true", "yes")
        else:
            overrides[dest] = coerce(value)
    target.set_defaults(**overrides)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config_defaults(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
