"""Command-line front end.

One process handles one subcommand. Textual outputs (TSV/CSV/SVG) begin with
a comment header recording version, command, flags, and seed, so identical
invocations produce byte-identical files. Domain errors exit with code 1 and
the error name on stderr; argparse handles unknown flags with code 2.
ACCDIST_THREADS bounds internal parallelism (0 = auto) without affecting
output bytes.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import aggregate, featstore, report, stats, translev
from .dtw import dtw_distance
from .errors import AccdistError
from .signal import MFCC_SAMPLE_RATE, compute_mfcc, load_wav, resample


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=96)


def _header(args) -> list[str]:
    """Comment header for output files: version, command, flags, seed."""
    skip = {"func", "command", "seed"}
    pairs = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        pairs.append(f"{key}={value}")
    return [
        f"accdist {__version__}",
        f"command: {args.command}",
        "config: " + " ".join(pairs),
        f"seed: {getattr(args, 'seed', 0)}",
    ]


def _write_tsv(path, header, comment_lines, column_row, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        for line in comment_lines:
            fh.write(f"# {line}\n")
        if column_row:
            fh.write("\t".join(column_row) + "\n")
        for row in rows:
            fh.write("\t".join(row) + "\n")


def _read_two_column_tsv(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                continue
            try:
                out[parts[0]] = float(parts[1])
            except ValueError:
                continue  # column header row
    return out


def _load_speaker_words(manifest, entries, tag):
    return {
        entry.speaker_id: featstore.load_word_features(entry, manifest.base_dir, tag)
        for entry in entries
    }


def _require_file(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {p}")
    return p


# --- subcommand implementations -----------------------------------------------

def _cmd_mfcc(args) -> int:
    clip = load_wav(_require_file(args.wav))
    if clip.sample_rate != MFCC_SAMPLE_RATE:
        clip = resample(clip, MFCC_SAMPLE_RATE)
    feats = compute_mfcc(clip, cmvn=args.cmvn)
    featstore.write_features(feats, args.output)
    print(f"wrote {args.output}: {feats.n_frames} frames x {feats.dim} "
          f"({feats.source_tag})")
    return 0


def _cmd_validate(args) -> int:
    path = _require_file(args.path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == featstore.ACFT_MAGIC or path.suffix == ".acft":
        m = featstore.validate_feature_file(path)
        print(f"{path}: ok ({m.n_frames} frames x {m.dim}, "
              f"stride {_fmt(m.frame_stride_ms)} ms, tag {m.source_tag!r})")
        return 0
    manifest = featstore.load_manifest(path)
    for line in featstore.validate_manifest(manifest, tag=args.features):
        print(line)
    print(f"{path}: ok ({len(manifest.speakers)} speakers)")
    return 0


def _cmd_dist(args) -> int:
    a = featstore.read_features(_require_file(args.pair[0]))
    b = featstore.read_features(_require_file(args.pair[1]))
    trace = dtw_distance(a, b)
    if args.trace:
        lines = [f"# {line}" for line in _header(args)] + ["i,j,local_cost"]
        lines += [f"{i},{j},{_fmt(cost)}" for i, j, cost in trace.steps]
        Path(args.trace).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"distance = {_fmt(trace.normalized_cost)}")
    print(f"total = {_fmt(trace.total_cost)} over {len(trace.steps)} steps")
    return 0


def _cmd_likeness(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    if args.matrix:
        speakers = _load_speaker_words(manifest, manifest.speakers, args.features)
        table = aggregate.pairwise_matrix(speakers, method_tag=args.features or "")
        rows = [[rid] + [_fmt(v) for v in table.values[i]]
                for i, rid in enumerate(table.rows)]
        _write_tsv(args.output, _header(args), [],
                   ("id",) + table.cols, rows)
    else:
        targets = _load_speaker_words(manifest, manifest.targets, args.features)
        references = _load_speaker_words(manifest, manifest.references, args.features)
        table = aggregate.likeness_table(targets, references,
                                         method_tag=args.features or "")
        rows = [[rid, _fmt(table.values[i, 0])] for i, rid in enumerate(table.rows)]
        _write_tsv(args.output, _header(args), [],
                   ("speaker", "native_likeness"), rows)
    print(f"wrote {args.output}")
    return 0


def _load_transcription_words(manifest, entries):
    out = {}
    for entry in entries:
        path = entry.resolve("transcription_path", manifest.base_dir)
        out[entry.speaker_id] = {
            word: translev.Transcription(tuple(tokens))
            for word, tokens in featstore.load_transcriptions(path).items()
        }
    return out


def _cmd_lev_dist(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    costs = translev.read_cost_table(_require_file(args.costs))

    def pair_fn(a, b):
        return translev.speaker_pair_lev(a, b, costs)

    if args.matrix:
        speakers = _load_transcription_words(manifest, manifest.speakers)
        table = aggregate.pairwise_matrix(speakers, method_tag="pmi-levenshtein",
                                          pair_fn=pair_fn)
        rows = [[rid] + [_fmt(v) for v in table.values[i]]
                for i, rid in enumerate(table.rows)]
        _write_tsv(args.output, _header(args), [],
                   ("id",) + table.cols, rows)
    else:
        targets = _load_transcription_words(manifest, manifest.targets)
        references = _load_transcription_words(manifest, manifest.references)
        table = aggregate.likeness_table(targets, references,
                                         method_tag="pmi-levenshtein",
                                         pair_fn=pair_fn)
        rows = [[rid, _fmt(table.values[i, 0])] for i, rid in enumerate(table.rows)]
        _write_tsv(args.output, _header(args), [],
                   ("speaker", "native_likeness"), rows)
    print(f"wrote {args.output}")
    return 0


def _cmd_pmi_train(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    by_word: dict = {}
    for entry in manifest.speakers:
        if entry.transcription_path is None:
            continue
        path = entry.resolve("transcription_path", manifest.base_dir)
        for word, tokens in featstore.load_transcriptions(path).items():
            by_word.setdefault(word, []).append(translev.Transcription(tuple(tokens)))
    corpus = [by_word[w] for w in sorted(by_word)]
    table = translev.induce_pmi_costs(corpus, max_iter=args.max_iter,
                                      smoothing=args.smoothing)
    translev.write_cost_table(table, args.output,
                              header=_header(args))
    print(f"wrote {args.output}: {len(table.sub)} substitution costs, "
          f"{len(table.indel)} indel costs, {table.iterations_run} iterations")
    return 0


def _parse_layers(spec: str) -> list[int]:
    layers = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            layers.extend(range(int(lo), int(hi) + 1))
        elif part:
            layers.append(int(part))
    if not layers:
        raise ValueError(f"no layers in {spec!r}")
    return sorted(set(layers))


def _cmd_layers(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    ratings = stats.load_ratings(_require_file(args.ratings))
    layers = _parse_layers(args.layers)
    per_layer = {}
    for layer in layers:
        tag = f"layer-{layer}"
        targets = _load_speaker_words(manifest, manifest.targets, tag)
        references = _load_speaker_words(manifest, manifest.references, tag)
        per_layer[layer] = (targets, references)
    result = aggregate.layer_sweep(per_layer, ratings,
                                   validation_fraction=args.val,
                                   seed=args.seed, threshold=args.threshold)
    comments = [
        f"best_layer: {result.best_layer}",
        f"validation_speakers: {','.join(result.validation_speakers)}",
    ]
    rows = [[str(layer), _fmt(result.per_layer_r[layer]),
             "1" if layer in result.tie_set else "0"]
            for layer in sorted(result.per_layer_r)]
    _write_tsv(args.output, _header(args), comments,
               ("layer", "r", "in_tie_set"), rows)
    print(f"best layer: {result.best_layer} "
          f"(tie set: {sorted(result.tie_set)})")
    return 0


def _cmd_corr(args) -> int:
    scores = _read_two_column_tsv(_require_file(args.scores))
    ratings = _read_two_column_tsv(_require_file(args.ratings))
    shared = sorted(set(scores) & set(ratings))
    r = stats.pearson([scores[s] for s in shared], [ratings[s] for s in shared])
    print(f"r = {_fmt(r)}")
    print(f"n = {len(shared)}")
    return 0


def _cmd_steiger(args) -> int:
    z, p = stats.steiger_z(args.rjk, args.rjh, args.rkh, args.n)
    print(f"z = {_fmt(z)}")
    print(f"p = {_fmt(p)}")
    return 0


def _read_table_tsv(path):
    """Read a TSV with one header row of column names and id-labeled rows."""
    columns = None
    ids = []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if columns is None:
                columns = parts[1:]
                continue
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    if columns is None:
        raise ValueError(f"{path}: no header row")
    return columns, ids, np.array(rows, dtype=np.float64)


def _cmd_regress(args) -> int:
    columns, _, data = _read_table_tsv(_require_file(args.data))
    predictors = [p.strip() for p in args.predictors.split(",")]
    for name in predictors + [args.response]:
        if name not in columns:
            raise ValueError(f"column {name!r} not in {args.data}")
    X = data[:, [columns.index(p) for p in predictors]]
    y = data[:, columns.index(args.response)]
    fit = stats.ols_regress(X, y, names=predictors)
    comments = [f"r_squared: {_fmt(fit.r_squared)}", f"n: {fit.n}"]
    rows = [[name, _fmt(est), _fmt(se), _fmt(t), _fmt(p)]
            for name, est, se, t, p in fit.rows()]
    _write_tsv(args.output, _header(args), comments,
               ("predictor", "estimate", "std_error", "t_value", "p_value"), rows)
    print(f"wrote {args.output} (R^2 = {_fmt(fit.r_squared)})")
    return 0


def _cmd_mds(args) -> int:
    columns, ids, data = _read_table_tsv(_require_file(args.distances))
    if columns != ids:
        raise ValueError("distance table row and column labels differ")
    result = stats.classical_mds(data, k=args.k)
    comments = [
        f"explained_variance: {_fmt(result.explained_variance)}",
        "eigenvalues: " + ",".join(_fmt(v) for v in result.eigenvalues),
    ]
    rows = [[ids[i]] + [_fmt(result.coordinates[i, d]) for d in range(args.k)]
            for i in range(len(ids))]
    _write_tsv(args.output, _header(args), comments,
               ("id",) + tuple(f"dim{d + 1}" for d in range(args.k)), rows)
    print(f"wrote {args.output} "
          f"(explained variance {_fmt(result.explained_variance)})")
    return 0


def _cmd_per_word(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    ratings = stats.load_ratings(_require_file(args.ratings))
    targets = _load_speaker_words(manifest, manifest.targets, args.features)
    references = _load_speaker_words(manifest, manifest.references, args.features)
    result = aggregate.per_word_correlations(targets, references, ratings)
    comments = [f"mean_r: {_fmt(result.mean_r)}", f"sd_r: {_fmt(result.sd_r)}"]
    rows = [[word, _fmt(result.per_word_r[word])]
            for word in sorted(result.per_word_r)]
    _write_tsv(args.output, _header(args), comments,
               ("word", "r"), rows)
    print(f"wrote {args.output} (mean r {_fmt(result.mean_r)})")
    return 0


def _cmd_sweep_ref(args) -> int:
    manifest = featstore.load_manifest(_require_file(args.manifest))
    ratings = stats.load_ratings(_require_file(args.ratings))
    targets = _load_speaker_words(manifest, manifest.targets, args.features)
    references = _load_speaker_words(manifest, manifest.references, args.features)
    result = aggregate.single_reference_sweep(targets, references, ratings)
    comments = [
        f"mean_r: {_fmt(result.mean_r)}",
        f"sd_r: {_fmt(result.sd_r)}",
        f"range: [{_fmt(result.min_r)}, {_fmt(result.max_r)}]",
    ]
    rows = [[rid, _fmt(result.per_reference_r[rid])]
            for rid in sorted(result.per_reference_r)]
    _write_tsv(args.output, _header(args), comments,
               ("reference", "r"), rows)
    print(f"wrote {args.output} (mean r {_fmt(result.mean_r)}, "
          f"sd {_fmt(result.sd_r)})")
    return 0


def _condition_files(spec_path: Path) -> list[Path]:
    if spec_path.is_dir():
        return sorted(spec_path.glob("*.acft"))
    files = []
    for raw in spec_path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            p = Path(line)
            files.append(p if p.is_absolute() else spec_path.parent / p)
    return files


def _cmd_living(args) -> int:
    reference = featstore.read_features(_require_file(args.reference))
    conditions = []
    for item in args.conditions.split(","):
        if "=" not in item:
            raise ValueError(f"condition {item!r} is not name=path")
        name, path = item.split("=", 1)
        files = _condition_files(_require_file(path))
        if not files:
            raise ValueError(f"condition {name!r} has no feature files")
        conditions.append((name, files))

    distances = []  # (condition index, value)
    for idx, (_, files) in enumerate(conditions):
        for f in files:
            rec = featstore.read_features(f)
            distances.append((idx, dtw_distance(rec, reference).normalized_cost))
    scaled = aggregate.minmax_scale([v for _, v in distances])
    rows = []
    for idx, (name, _) in enumerate(conditions):
        values = scaled[[i for i, (c, _) in enumerate(distances) if c == idx]]
        sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
        rows.append([name, _fmt(float(values.mean())), _fmt(sd), str(values.size)])
    _write_tsv(args.output, _header(args), [],
               ("condition", "mean", "sd", "n"), rows)
    print(f"wrote {args.output}")
    return 0


def _cmd_viz_pair(args) -> int:
    a = featstore.read_features(_require_file(args.featA))
    b = featstore.read_features(_require_file(args.featB))
    trace = dtw_distance(a, b)
    spec = report.profile_spec_from_trace(trace, window=args.window)
    header = _header(args)
    report.emit_profile_svg(spec, args.output, header=header)
    report.emit_profile_csv(spec, Path(args.output).with_suffix(".csv"),
                            header=header)
    print(f"wrote {args.output} (global distance {_fmt(trace.normalized_cost)})")
    return 0


def _cmd_viz_mds(args) -> int:
    _, ids, data = _read_table_tsv(_require_file(args.coords))
    geo = None
    if args.geo:
        geo_cols, geo_ids, geo_data = _read_table_tsv(_require_file(args.geo))
        if len(geo_cols) < 2:
            raise ValueError("geo file needs two coordinate columns")
        geo = {gid: (geo_data[i, 0], geo_data[i, 1])
               for i, gid in enumerate(geo_ids)}
    report.emit_mds_map(data, ids, geo=geo, path=args.output,
                        header=_header(args))
    print(f"wrote {args.output}")
    return 0


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accdist", formatter_class=_formatter,
        description="Acoustic and transcription-based pronunciation distances.")
    parser.add_argument("--version", action="version",
                        version=f"accdist {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("mfcc", formatter_class=_formatter,
                       help="extract 39-dim MFCC features from a WAV file")
    p.add_argument("wav", help="input WAV (PCM16 or float32)")
    p.add_argument("-o", "--output", required=True, help="output feature file")
    p.add_argument("--cmvn", action="store_true",
                   help="per-utterance cepstral mean/variance normalization")
    p.set_defaults(func=_cmd_mfcc)

    p = sub.add_parser("validate", formatter_class=_formatter,
                       help="check a manifest or a feature file")
    p.add_argument("path", help="manifest TSV or ACFT feature file")
    p.add_argument("--features", default=None,
                   help="feature tag substituted into {features} templates")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("dist", formatter_class=_formatter,
                       help="DTW distance between two feature files")
    p.add_argument("--pair", nargs=2, required=True, metavar=("FEAT_A", "FEAT_B"))
    p.add_argument("--trace", default=None, help="write alignment trace CSV here")
    p.set_defaults(func=_cmd_dist)

    p = sub.add_parser("likeness", formatter_class=_formatter,
                       help="native-likeness scores from acoustic features")
    p.add_argument("manifest")
    p.add_argument("--features", default=None,
                   help="feature tag substituted into {features} templates")
    p.add_argument("--matrix", action="store_true",
                   help="emit the full speaker x speaker matrix instead")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_likeness)

    p = sub.add_parser("lev-dist", formatter_class=_formatter,
                       help="native-likeness scores from transcriptions")
    p.add_argument("manifest")
    p.add_argument("--costs", required=True, help="segment cost table TSV")
    p.add_argument("--matrix", action="store_true",
                   help="emit the full speaker x speaker matrix instead")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_lev_dist)

    p = sub.add_parser("pmi-train", formatter_class=_formatter,
                       help="induce PMI segment costs from manifest transcriptions")
    p.add_argument("manifest")
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--smoothing", type=float, default=0.5)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_pmi_train)

    p = sub.add_parser("layers", formatter_class=_formatter,
                       help="select the best neural layer on a validation split")
    p.add_argument("manifest")
    p.add_argument("--layers", required=True,
                   help="layer list, e.g. 1..24 or 1,5,9")
    p.add_argument("--ratings", required=True, help="ratings TSV")
    p.add_argument("--val", type=float, default=0.25,
                   help="validation fraction of target speakers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=0.05,
                   help="tie-set significance threshold")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_layers)

    p = sub.add_parser("corr", formatter_class=_formatter,
                       help="Pearson correlation between two score tables")
    p.add_argument("scores", help="TSV speaker<TAB>value")
    p.add_argument("ratings", help="TSV speaker<TAB>value")
    p.set_defaults(func=_cmd_corr)

    p = sub.add_parser("steiger", formatter_class=_formatter,
                       help="dependent-correlation z test")
    p.add_argument("--rjk", type=float, required=True,
                   help="first correlation sharing variable j")
    p.add_argument("--rjh", type=float, required=True,
                   help="second correlation sharing variable j")
    p.add_argument("--rkh", type=float, required=True,
                   help="correlation between the non-shared variables")
    p.add_argument("-n", type=int, required=True, dest="n", help="sample size")
    p.set_defaults(func=_cmd_steiger)

    p = sub.add_parser("regress", formatter_class=_formatter,
                       help="OLS regression with coefficient table")
    p.add_argument("data", help="TSV with header row and id-labeled rows")
    p.add_argument("--response", required=True)
    p.add_argument("--predictors", required=True, help="comma-separated columns")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_regress)

    p = sub.add_parser("mds", formatter_class=_formatter,
                       help="classical MDS of a distance matrix")
    p.add_argument("distances", help="square distance TSV")
    p.add_argument("-k", type=int, default=2, dest="k",
                   help="output dimensions")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_mds)

    p = sub.add_parser("per-word", formatter_class=_formatter,
                       help="correlation with ratings per individual word")
    p.add_argument("manifest")
    p.add_argument("--features", default=None)
    p.add_argument("--ratings", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_per_word)

    p = sub.add_parser("sweep-ref", formatter_class=_formatter,
                       help="correlation when each reference serves alone")
    p.add_argument("manifest")
    p.add_argument("--features", default=None)
    p.add_argument("--ratings", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sweep_ref)

    p = sub.add_parser("living", formatter_class=_formatter,
                       help="condition means of jointly min-max scaled distances")
    p.add_argument("--conditions", required=True,
                   help="name=path pairs, comma-separated (dir or list file)")
    p.add_argument("--reference", required=True,
                   help="feature file every recording is compared against")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_living)

    p = sub.add_parser("viz", formatter_class=_formatter,
                       help="figures: per-frame profiles and MDS maps")
    viz_sub = p.add_subparsers(dest="viz_command", required=True, metavar="what")

    vp = viz_sub.add_parser("pair", formatter_class=_formatter,
                            help="per-frame distance profile for two feature files")
    vp.add_argument("featA")
    vp.add_argument("featB")
    vp.add_argument("--window", type=int, default=9,
                    help="moving-average window (odd)")
    vp.add_argument("-o", "--output", required=True, help="output SVG")
    vp.set_defaults(func=_cmd_viz_pair)

    vm = viz_sub.add_parser("mds", formatter_class=_formatter,
                            help="map of MDS coordinates (CSV twin always written)")
    vm.add_argument("coords", help="coordinates TSV from accdist mds")
    vm.add_argument("--geo", default=None,
                    help="TSV id<TAB>x<TAB>y geographic positions")
    vm.add_argument("-o", "--output", required=True, help="output SVG")
    vm.set_defaults(func=_cmd_viz_mds)

    return parser


def _validate_fractions(args) -> None:
    for name in ("val", "threshold"):
        if hasattr(args, name):
            value = getattr(args, name)
            if value is not None and not (0.0 < value < 1.0):
                raise ValueError(f"--{name} must be in (0, 1), got {value}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate_fractions(args)
        return args.func(args)
    except AccdistError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"FileNotFound: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
