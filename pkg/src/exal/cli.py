"""Command-line front end: run-game, bench, and export-images.

Configuration lives in a flat ``key = value`` text file with dotted section
prefixes (``swarm.*``, ``train.*``, ``game.*``, ``data.*``, ``output.*``).
Every key has a default, so an empty file is a valid configuration; unknown
keys are rejected by name. ``#`` starts a comment. Seed precedence:
``--seed`` flag, then the ``EXAL_SEED`` environment variable, then
``game.seed`` from the file.

Exit codes: 0 success, 2 configuration error, 3 data error, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .benchmarks import benchmark_rows
from .data_io import (
    PairSpec,
    RawLabeledImages,
    export_triptych,
    load_idx,
    load_image_dir,
    make_pair_dataset,
    make_synthetic,
)
from .errors import ConfigurationError, DataError
from .game import (
    _SALT_DATA,
    GameConfig,
    derive_seed,
    load_perturbation,
    results_to_csv,
    run_experiment,
    save_perturbation,
)
from .learner import TrainConfig
from .swarm import SwarmConfig

_SALT_SYNTH = 17


def _to_bool(text: str) -> bool:
    if text.lower() in ("true", "1", "yes"):
        return True
    if text.lower() in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _to_optional_float(text: str):
    return None if text == "" else float(text)


# key -> (converter, default). The resolved snapshot always carries every key.
CONFIG_SCHEMA = {
    "swarm.n_particles": (int, 20),
    "swarm.beta": (float, 0.9),
    "swarm.mu": (float, 0.9),
    "swarm.c1": (float, 2.0),
    "swarm.c2": (float, 2.0),
    "swarm.max_iters": (int, 50),
    "swarm.variant": (str, "empso"),
    "swarm.clip_velocity_to_bounds": (_to_bool, False),
    "swarm.early_stop_fitness": (_to_optional_float, None),
    "train.epochs": (int, 5),
    "train.batch_size": (int, 32),
    "train.learning_rate": (float, 0.01),
    "train.momentum": (float, 0.9),
    "game.bounds_halfwidth": (float, 0.1),
    "game.scale": (float, 1.0),
    "game.seed": (int, 0),
    "data.source": (str, "synthetic"),
    "data.pairs": (str, ""),
    "data.samples_per_class": (int, 1000),
    "data.train_fraction": (float, 0.8),
    "data.idx_images": (str, ""),
    "data.idx_labels": (str, ""),
    "data.image_root": (str, ""),
    "data.classes": (str, ""),
    "data.image_size": (int, 32),
    "data.synthetic_n_per_class": (int, 200),
    "data.synthetic_size": (int, 16),
    "data.synthetic_separation": (float, 0.8),
    "output.dir": (str, "exal_out"),
    "output.triptychs_per_class": (int, 1),
}


def parse_config_file(path) -> dict[str, str]:
    """Raw key/value pairs from a flat config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigurationError(
                f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}"
            )
        key, value = stripped.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def resolve_config(path=None, overrides: dict[str, str] | None = None) -> dict:
    """Defaults, then file values, then overrides; typed and fully populated."""
    resolved = {key: default for key, (_, default) in CONFIG_SCHEMA.items()}
    raw: dict[str, str] = {}
    if path is not None:
        raw.update(parse_config_file(path))
    raw.update(overrides or {})
    for key, text in raw.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigurationError(f"unknown config key {key!r}")
        converter = CONFIG_SCHEMA[key][0]
        try:
            resolved[key] = converter(text) if isinstance(text, str) else text
        except ValueError as exc:
            raise ConfigurationError(f"config key {key!r}: {exc}") from exc
    return resolved


def game_config_from(resolved: dict, seed: int) -> GameConfig:
    swarm = SwarmConfig(
        n_particles=resolved["swarm.n_particles"],
        beta=resolved["swarm.beta"],
        mu=resolved["swarm.mu"],
        c1=resolved["swarm.c1"],
        c2=resolved["swarm.c2"],
        max_iters=resolved["swarm.max_iters"],
        variant=resolved["swarm.variant"],
        clip_velocity_to_bounds=resolved["swarm.clip_velocity_to_bounds"],
        early_stop_fitness=resolved["swarm.early_stop_fitness"],
    )
    train = TrainConfig(
        epochs=resolved["train.epochs"],
        batch_size=resolved["train.batch_size"],
        learning_rate=resolved["train.learning_rate"],
        momentum=resolved["train.momentum"],
    )
    return GameConfig(
        swarm=swarm,
        train=train,
        bounds_halfwidth=resolved["game.bounds_halfwidth"],
        scale=resolved["game.scale"],
        rng_seed=seed,
    )


def resolve_seed(flag_seed: int | None, resolved: dict) -> int:
    if flag_seed is not None:
        return flag_seed
    env = os.environ.get("EXAL_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigurationError(f"EXAL_SEED must be an integer, got {env!r}") from exc
    return resolved["game.seed"]


def parse_pairs(text: str) -> list[tuple[str, str]]:
    if not text:
        return []
    pairs = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ConfigurationError(
                f"config key 'data.pairs': expected 'pos:neg' entries, got {chunk!r}"
            )
        pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs


def load_source(resolved: dict, seed: int):
    """Build (raw images, integer pairs, label display names) per data.source."""
    source = resolved["data.source"]
    pair_text = resolved["data.pairs"]
    if source == "synthetic":
        data = make_synthetic(
            n_per_class=resolved["data.synthetic_n_per_class"],
            shape=(resolved["data.synthetic_size"], resolved["data.synthetic_size"]),
            separation=resolved["data.synthetic_separation"],
            seed=derive_seed(seed, _SALT_SYNTH),
        )
        h, w = data.shape
        images = np.rint(data.X * 255.0).astype(np.uint8).reshape(data.n, h, w)
        raw = RawLabeledImages(images=images, labels=data.y)
        return raw, [(1, 0)], None
    if source == "idx":
        images_path = resolved["data.idx_images"]
        labels_path = resolved["data.idx_labels"]
        if not images_path or not labels_path:
            raise ConfigurationError(
                "data.idx_images and data.idx_labels are required when data.source = idx"
            )
        for p in (images_path, labels_path):
            if not Path(p).is_file():
                raise DataError(f"dataset file {p} does not exist")
        raw = load_idx(images_path, labels_path)
        named = parse_pairs(pair_text)
        if not named:
            raise ConfigurationError("data.pairs must list at least one pos:neg pair")
        try:
            pairs = [(int(a), int(b)) for a, b in named]
        except ValueError as exc:
            raise ConfigurationError(
                f"config key 'data.pairs': IDX labels are integers ({exc})"
            ) from exc
        return raw, pairs, None
    if source == "image_dir":
        root = resolved["data.image_root"]
        classes = [c.strip() for c in resolved["data.classes"].split(",") if c.strip()]
        if not root or not classes:
            raise ConfigurationError(
                "data.image_root and data.classes are required when data.source = image_dir"
            )
        if not Path(root).is_dir():
            raise DataError(f"dataset directory {root} does not exist")
        raw = load_image_dir(root, classes, image_size=resolved["data.image_size"])
        named = parse_pairs(pair_text)
        if not named:
            raise ConfigurationError("data.pairs must list at least one pos:neg pair")
        index = {name: i for i, name in enumerate(classes)}
        pairs = []
        for a, b in named:
            if a not in index or b not in index:
                missing = a if a not in index else b
                raise ConfigurationError(
                    f"pair class {missing!r} is not in data.classes {classes}"
                )
            pairs.append((index[a], index[b]))
        names = {i: name for name, i in index.items()}
        return raw, pairs, names
    raise ConfigurationError(
        f"data.source must be synthetic, idx, or image_dir, got {source!r}"
    )


@dataclass
class RunManifest:
    """Resolved configuration plus the artifacts a run produced."""

    config: dict
    seed: int
    artifacts: list[str] = field(default_factory=list)
    runtime_seconds: float = 0.0

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def _write_triptychs(
    out_dir: Path, pair_name: str, data, a_star, scale: float, per_class: int
) -> list[str]:
    """First ``per_class`` test samples of each class, three panels each."""
    written = []
    pair_dir = out_dir / "images" / f"pair_{pair_name}"
    for label in (1, 0):
        rows = np.flatnonzero(data.y == label)[:per_class]
        for rank, row in enumerate(rows):
            prefix = pair_dir / f"label{label}_{rank:02d}"
            export_triptych(data.X[row], a_star, scale, data.shape, prefix)
            written.extend(
                str(prefix) + suffix + ".pgm"
                for suffix in ("_original", "_perturbation", "_perturbed")
            )
    return written


def cmd_run_game(config_path, seed=None, pairs=None, scale=None) -> int:
    started = time.perf_counter()
    overrides: dict[str, str] = {}
    if pairs is not None:
        overrides["data.pairs"] = pairs
    if scale is not None:
        overrides["game.scale"] = scale
    resolved = resolve_config(config_path, overrides)
    run_seed = resolve_seed(seed, resolved)
    resolved["game.seed"] = run_seed
    cfg = game_config_from(resolved, run_seed)

    raw, int_pairs, names = load_source(resolved, run_seed)
    outcomes = run_experiment(
        int_pairs,
        raw,
        cfg,
        samples_per_class=resolved["data.samples_per_class"],
        train_fraction=resolved["data.train_fraction"],
        label_names=names,
    )

    out_dir = Path(resolved["output.dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []

    csv_path = out_dir / "results.csv"
    csv_path.write_text(results_to_csv(outcomes, cfg))
    artifacts.append(str(csv_path))

    for outcome in outcomes:
        pair_name = f"{outcome.label_positive}-{outcome.label_negative}"
        save_perturbation(outcome.result.a_star, out_dir / f"perturbation_{pair_name}.bin")
        artifacts.append(str(out_dir / f"perturbation_{pair_name}.bin"))
        artifacts.extend(
            _write_triptychs(
                out_dir,
                pair_name,
                outcome.data_test,
                outcome.result.a_star,
                cfg.scale,
                resolved["output.triptychs_per_class"],
            )
        )

    manifest = RunManifest(
        config=resolved,
        seed=run_seed,
        artifacts=artifacts,
        runtime_seconds=time.perf_counter() - started,
    )
    manifest.write(out_dir / "run_manifest.json")

    for outcome in outcomes:
        r = outcome.result
        verdict = "Satisfied" if r.hypothesis_satisfied else "Not Satisfied"
        print(
            f"pair ({outcome.label_positive},{outcome.label_negative}): "
            f"f1 original {r.f1_original:.4f}, manipulated {r.f1_manipulated:.4f}, "
            f"secure {r.f1_secure:.4f} -> {verdict}"
        )
    print(f"wrote {len(artifacts) + 1} artifacts under {out_dir}")
    return 0


def cmd_bench(fn_name, dims=2, seed=None, out=None, config_path=None) -> int:
    resolved = resolve_config(config_path)
    run_seed = resolve_seed(seed, resolved)
    cfg = game_config_from(resolved, run_seed)
    rows = benchmark_rows(fn_name, dims=dims, seed=run_seed, config=cfg.swarm)
    out_path = Path(out) if out else Path(f"bench_{fn_name}.csv")
    lines = ["iteration,variant,fitness"]
    lines.extend(f"{t},{variant},{fitness!r}" for t, variant, fitness in rows)
    out_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


def cmd_export_images(perturbation_path, config_path, scale=None, out="exal_images", count=None) -> int:
    if not Path(perturbation_path).is_file():
        raise DataError(f"perturbation file {perturbation_path} does not exist")
    a_star = load_perturbation(perturbation_path)

    overrides: dict[str, str] = {}
    if scale is not None:
        overrides["game.scale"] = scale
    resolved = resolve_config(config_path, overrides)
    run_seed = resolve_seed(None, resolved)
    if count is not None:
        resolved["output.triptychs_per_class"] = count

    raw, int_pairs, names = load_source(resolved, run_seed)
    m = raw.images.shape[1] * raw.images.shape[2]
    if a_star.size != m:
        raise ConfigurationError(
            f"perturbation has {a_star.size} entries but dataset images have {m} pixels"
        )

    display = names or {}
    out_dir = Path(out)
    written = []
    for i, (pos, neg) in enumerate(int_pairs):
        spec = PairSpec(
            positive_label=int(pos),
            negative_label=int(neg),
            samples_per_class=resolved["data.samples_per_class"],
            train_fraction=resolved["data.train_fraction"],
        )
        _, data_test = make_pair_dataset(raw, spec, seed=derive_seed(run_seed, _SALT_DATA + i))
        pair_name = (
            f"{display.get(int(pos), str(pos))}-{display.get(int(neg), str(neg))}"
        )
        written.extend(
            _write_triptychs(
                out_dir,
                pair_name,
                data_test,
                a_star,
                resolved["game.scale"],
                resolved["output.triptychs_per_class"],
            )
        )
    print(f"wrote {len(written)} images under {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exal", description="Adversarial-learning game driver"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-game", help="run the full game for each configured pair")
    run.add_argument("--config", required=True, help="path to the flat key=value config")
    run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    run.add_argument("--pairs", default=None, help="pos:neg[,pos:neg...] label pairs")
    run.add_argument("--scale", default=None, help="perturbation scale factor")

    bench = sub.add_parser("bench", help="optimizer benchmark, CSV convergence curves")
    bench.add_argument("--fn", required=True, help="sphere, rastrigin, or rosenbrock")
    bench.add_argument("--dims", type=int, default=2)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out", default=None, help="CSV path (default bench_<fn>.csv)")
    bench.add_argument("--config", default=None, help="optional config for swarm.* keys")

    exp = sub.add_parser("export-images", help="render triptychs for a stored perturbation")
    exp.add_argument("--perturbation", required=True, help="EXALP1 container path")
    exp.add_argument("--config", required=True, help="dataset configuration")
    exp.add_argument("--scale", default=None)
    exp.add_argument("--out", default="exal_images")
    exp.add_argument("--count", type=int, default=None, help="samples per class")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run-game":
            return cmd_run_game(args.config, args.seed, args.pairs, args.scale)
        if args.command == "bench":
            return cmd_bench(args.fn, args.dims, args.seed, args.out, args.config)
        if args.command == "export-images":
            return cmd_export_images(
                args.perturbation, args.config, args.scale, args.out, args.count
            )
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
