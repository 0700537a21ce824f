"""Command line entry point.

Subcommands: ingest, extract, eval, aggregate, vectorize, rdf, serve, all.
Exit codes: 0 success, 1 user error, 2 dependency/stale error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import AuthorKGError, DependencyError, UserError
from .pipeline import PipelineLock, run_all, run_stage

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER = 1
EXIT_DEPENDENCY = 2
EXIT_INTERNAL = 3

_STAGE_COMMANDS = {
    "ingest": "harvest and normalize the corpus",
    "extract": "extract keyphrases from titles and abstracts",
    "eval": "score extractor backends against the evaluation sample",
    "aggregate": "aggregate per-author descriptor statistics",
    "vectorize": "build the vocabulary and author vectors",
    "rdf": "export the knowledge graph as N-Triples and Turtle",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="authorkg",
        description="Author-centric research knowledge graph pipeline and exploration service.",
    )
    parser.add_argument("--config", metavar="PATH", help="config file (JSON or YAML)")
    parser.add_argument("--data-dir", metavar="PATH", help="override the data directory")
    parser.add_argument("--force", action="store_true", help="rerun stages even if up to date")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _STAGE_COMMANDS.items():
        sub.add_parser(name, help=help_text)
    sub.add_parser("all", help="run the full pipeline (ingest through rdf)")
    sub.add_parser("serve", help="serve the exploration API (and UI bundle, if configured)")
    return parser


def _serve(config) -> None:
    import uvicorn

    from .service import bind_address, create_app

    app = create_app(config)
    host, port = bind_address(config)
    with PipelineLock(config.data_dir, shared=True):
        uvicorn.run(app, host=host, port=port, log_level="info")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config, data_dir=args.data_dir)
        if args.command == "all":
            ran = run_all(config, force=args.force)
            logger.info("pipeline complete; stages run: %s", ", ".join(ran) or "none (up to date)")
        elif args.command == "serve":
            _serve(config)
        else:
            run_stage(args.command, config, force=args.force)
        return EXIT_OK
    except DependencyError as exc:
        logger.error("%s", exc)
        return EXIT_DEPENDENCY
    except UserError as exc:
        logger.error("%s", exc)
        return EXIT_USER
    except AuthorKGError as exc:
        logger.error("%s", exc)
        return EXIT_USER
    except KeyboardInterrupt:
        return EXIT_INTERNAL
    except Exception:  # pragma: no cover - last-resort diagnostics
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
