import argparse
import logging
import sys

from app.baselines.propagation import propagate_confound_labels
from app.datasets import (
    CONTINUOUS,
    DISCRETE,
    generate_rotated_glyphs,
    generate_two_factor_gaussians,
    load_bundle,
    mask_confound_labels,
    save_bundle,
)
from app.harness import (
    BASELINE_METHODS,
    bundles_for,
    evaluate,
    load_config,
    plot_centroid_grid,
    plot_embeddings,
    reconstruct_centroids,
    report,
    run_baseline,
    train_scab,
)
from app.harness.config import ABLATIONS
from app.utils.exceptions import ScabError

GENERATOR_KINDS = ("gaussians", "glyphs", "glyphs-con")


def parse_arguments(argv=None):
    """
    Parse command-line arguments.

    Args:
        argv (list, optional): The arguments; defaults to sys.argv[1:].

    Returns:
        argparse.Namespace: Parsed command-line arguments.
    """
    parser = argparse.ArgumentParser(
        prog="scab",
        description="A command-line tool for clustering data while removing a known confounding factor.",
    )
    parser.add_argument("--verbose", action="store_true", help="Log debug messages")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate a synthetic confounded dataset")
    gen.add_argument("--kind", choices=GENERATOR_KINDS, required=True, help="Generator to run")
    gen.add_argument("--out", required=True, help="Dataset directory to write")
    gen.add_argument("--k", type=int, help="Interest clusters (gaussians) or rotation angles (glyphs)")
    gen.add_argument("--g", type=int, help="Confound classes (gaussians) or glyphs")
    gen.add_argument("--n-per-cell", type=int, help="Samples per cell (per glyph for glyphs-con)")
    gen.add_argument("--dim", type=int, default=4, help="Feature dimension of the gaussians")
    gen.add_argument("--interest-gap", type=float, default=6.0, help="Interest shift of the gaussians")
    gen.add_argument("--confound-gap", type=float, default=12.0, help="Confound shift of the gaussians")
    gen.add_argument("--noise-sigma", type=float, default=1.0, help="Noise level of the gaussians")
    gen.add_argument("--image-size", type=int, default=28, help="Side length of the glyph images")
    gen.add_argument("--seed", type=int, default=0, help="Random seed")

    train = commands.add_parser("train", help="Train the confound-aware clustering model")
    train.add_argument("--data", required=True, help="Dataset directory")
    train.add_argument("--out", required=True, help="Run directory to write")
    train.add_argument("--config", help="JSON config file")
    train.add_argument("--eta1", type=float, help="Weight of the confound-removal term")
    train.add_argument("--eta2", type=float, help="Weight of the clustering term")
    train.add_argument("--epochs", type=int, help="Training epochs")
    train.add_argument("--batch-size", type=int, help="Minibatch size")
    train.add_argument("--learning-rate", type=float, help="Adam learning rate")
    train.add_argument("--warmup-epochs", type=int, help="Epochs before the centroids are initialized")
    train.add_argument("--ablate", choices=[a for a in ABLATIONS if a != "none"], help="Disable model parts")
    train.add_argument("--seed", type=int, help="Random seed")

    baseline = commands.add_parser("baseline", help="Run a comparison method")
    baseline.add_argument("--method", choices=BASELINE_METHODS, required=True, help="Method to run")
    baseline.add_argument("--data", required=True, help="Dataset directory")
    baseline.add_argument("--out", required=True, help="Run directory to write")
    baseline.add_argument("--config", help="JSON config file")
    baseline.add_argument("--epochs", type=int, help="Autoencoder epochs (ruv_z)")
    baseline.add_argument("--seed", type=int, help="Random seed")

    propagate = commands.add_parser("propagate", help="Mask confound labels and predict the hidden ones")
    propagate.add_argument("--data", required=True, help="Fully labeled dataset directory")
    propagate.add_argument("--labeled-ratio", type=float, required=True, help="Fraction of labels kept")
    propagate.add_argument("--out", required=True, help="Dataset directory to write")
    propagate.add_argument("--seed", type=int, default=0, help="Random seed")

    evaluation = commands.add_parser("eval", help="Score a run against its dataset")
    evaluation.add_argument("--run", required=True, help="Run directory")
    evaluation.add_argument("--data", required=True, help="Dataset directory")

    compare = commands.add_parser("report", help="Compare runs")
    compare.add_argument("runs", nargs="+", help="Run directories")
    compare.add_argument("--csv", help="CSV file for the table")
    compare.add_argument("--plot", help="SVG file for the PCA scatter of the embeddings")
    compare.add_argument("--data", help="Dataset directory used to color the scatter by confound")

    centroids = commands.add_parser("centroids", help="Decode every centroid under every confound value")
    centroids.add_argument("--run", required=True, help="Trained run directory")
    centroids.add_argument("--out", required=True, help="SVG file for the grid")
    centroids.add_argument("--n-values", type=int, default=5, help="Values of a continuous confound")

    return parser.parse_args(argv)


def _given(value, default):
    return default if value is None else value


def generate(args):
    """
    Run the requested generator with the documented defaults for unset sizes.

    Args:
        args (argparse.Namespace): Parsed `gen` arguments.

    Returns:
        DatasetBundle: The generated dataset.
    """
    if args.kind == "gaussians":
        return generate_two_factor_gaussians(
            k_clusters=_given(args.k, 2),
            g_categories=_given(args.g, 2),
            n_per_cell=_given(args.n_per_cell, 100),
            dim=args.dim,
            interest_gap=args.interest_gap,
            confound_gap=args.confound_gap,
            noise_sigma=args.noise_sigma,
            seed=args.seed,
        )
    if args.kind == "glyphs":
        return generate_rotated_glyphs(
            DISCRETE,
            _given(args.g, 6),
            _given(args.k, 5),
            _given(args.n_per_cell, 300),
            image_size=args.image_size,
            seed=args.seed,
        )
    return generate_rotated_glyphs(
        CONTINUOUS,
        _given(args.g, 6),
        args.k,
        _given(args.n_per_cell, 300),
        image_size=args.image_size,
        seed=args.seed,
    )


def run(args):
    """
    Dispatch a parsed command.

    Args:
        args (argparse.Namespace): Parsed command-line arguments.
    """
    if args.command == "gen":
        save_bundle(generate(args), args.out)
    elif args.command == "train":
        config = load_config(
            args.config,
            eta1=args.eta1,
            eta2=args.eta2,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            warmup_epochs=args.warmup_epochs,
            ablation=args.ablate,
            seed=args.seed,
        )
        train_scab(load_bundle(args.data), config, args.out, data_dir=args.data)
    elif args.command == "baseline":
        config = load_config(args.config, epochs=args.epochs, seed=args.seed)
        run_baseline(args.method, load_bundle(args.data), config, args.out, data_dir=args.data)
    elif args.command == "propagate":
        masked = mask_confound_labels(load_bundle(args.data), args.labeled_ratio, args.seed)
        result = propagate_confound_labels(masked, args.seed)
        save_bundle(result.bundle, args.out)
    elif args.command == "eval":
        print(evaluate(args.run, load_bundle(args.data)).to_string(float_format="%.4f"))
    elif args.command == "report":
        print(report(args.runs, csv_path=args.csv).to_string(float_format="%.4f"))
        if args.plot:
            plot_embeddings(args.runs, args.plot, bundles_for(args.runs, args.data))
    elif args.command == "centroids":
        plot_centroid_grid(reconstruct_centroids(args.run, n_continuous=args.n_values), args.out)


def main(argv=None):
    """
    Main execution logic.

    Returns:
        int: The exit status.
    """
    args = parse_arguments(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
    )
    try:
        run(args)
    except ScabError as e:
        logging.error("%s", e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
