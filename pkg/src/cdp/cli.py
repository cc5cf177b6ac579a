"""Operator command line.

Verbs: ingest, reindex, materialize, report, replay, search, strain, serve.
Exit codes: 0 success; 1 domain errors (validation, rules, replay mismatch);
2 I/O errors (missing files or store); 64 usage errors. All stdout output
is canonical text so golden-file tests and scripts can parse it.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

from .canonical import canonical_dumps
from .capture.ingest import IngestStatus, Ingestor
from .clock import Clock
from .configs import ConfigRegistry
from .errors import CdpError, ConfigError, StorageError, UnknownDataset
from .processing.datasets import materialize_dataset
from .processing.indexing import InvertedIndex, rebuild_search_index, search
from .quality.replay import replay, verify_replay
from .quality.report import quality_report
from .store import RawDocument, Store

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 64, not argparse's 2
        raise UsageError(message)


def emit(value) -> None:
    sys.stdout.write(canonical_dumps(value).decode("utf-8") + "\n")


def build_parser() -> Parser:
    parser = Parser(prog="cdp", description="Cannabinoids Data Platform")
    parser.add_argument("--store", default=None, help="store root (env CDP_STORE, default ./store)")
    parser.add_argument("--config", default=None, help="config dir (env CDP_CONFIG, default ./config)")
    commands = parser.add_subparsers(dest="verb", required=True)

    ingest = commands.add_parser("ingest", help="ingest a file into the store")
    ingest.add_argument("path", help="input file")
    ingest.add_argument("--spec", default=None,
                        help="mapping spec id from the config dir, or a path to a spec file")
    ingest.add_argument("--provider", default=None, help="source provider (<sub-domain>:<name>)")

    commands.add_parser("reindex", help="rebuild the search index")

    materialize = commands.add_parser("materialize", help="materialize a dataset")
    materialize.add_argument("--dataset", required=True)

    report = commands.add_parser("report", help="dataset quality report")
    report.add_argument("--dataset", required=True)
    report.add_argument("--schema", default=None, help="check all records against this schema_ref")

    replay_cmd = commands.add_parser("replay", help="re-run the lineage log into a fresh zone")
    replay_cmd.add_argument("--verify", action="store_true",
                            help="exit 0 only if the rebuilt typed zone is byte-identical")
    replay_cmd.add_argument("--target", default=None, help="directory for the rebuilt store")

    search_cmd = commands.add_parser("search", help="ranked search over the index")
    search_cmd.add_argument("query")
    search_cmd.add_argument("--limit", type=int, default=50)

    strain = commands.add_parser("strain", help="strain similarity analytics")
    strain_sub = strain.add_subparsers(dest="strain_verb", required=True)
    similar = strain_sub.add_parser("similar")
    similar.add_argument("sample_id")
    similar.add_argument("-k", type=int, default=5)
    similar.add_argument("--dataset", default=None)
    consistency = strain_sub.add_parser("consistency")
    consistency.add_argument("--dataset", default=None)

    serve_cmd = commands.add_parser("serve", help="run the HTTP API")
    serve_cmd.add_argument("--bind", default=None, help="host:port (env CDP_BIND)")

    return parser


def _store_root(args) -> Path:
    return Path(args.store or os.environ.get("CDP_STORE") or "store")


def _config_dir(args) -> Path:
    return Path(args.config or os.environ.get("CDP_CONFIG") or "config")


def _open_store(args, must_exist: bool) -> Store:
    root = _store_root(args)
    if must_exist and not root.exists():
        raise FileNotFoundError(f"store directory {root} does not exist")
    return Store(root)


def _registry(args) -> ConfigRegistry:
    config_dir = _config_dir(args)
    if not config_dir.exists():
        raise FileNotFoundError(f"config directory {config_dir} does not exist")
    return ConfigRegistry.load(config_dir)


def _pseudonym_key() -> bytes:
    return os.environ.get("CDP_PSEUDONYM_KEY", "").encode("utf-8")


def _load_index(store: Store) -> InvertedIndex:
    blob = store.load_index_blob()
    if blob is None:
        raise FileNotFoundError("no search index in this store; run `cdp reindex` first")
    return InvertedIndex.from_value(blob)


def _strain_profiles(store: Store, dataset_id: Optional[str]):
    from .analytics.strain import profiles_from_store

    return profiles_from_store(store, dataset_id)


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    clock = Clock()
    try:
        if args.verb == "ingest":
            path = Path(args.path)
            if not path.exists():
                raise FileNotFoundError(f"input file {path} does not exist")
            registry = _registry(args)
            store = _open_store(args, must_exist=False)
            spec = None
            if args.spec:
                spec_path = Path(args.spec)
                if spec_path.is_file():
                    from .canonical import canonical_loads
                    from .capture.mapping import MappingSpec

                    spec = MappingSpec.from_value(canonical_loads(spec_path.read_bytes()))
                    registry.register_value(spec.to_value())
                else:
                    spec = registry.spec(args.spec)
            provider = args.provider or (
                f"{spec.target_sub_domain.value}:cli" if spec else "research:cli"
            )
            doc = RawDocument.from_bytes(
                path.read_bytes(),
                provider=provider,
                received_at=clock.now_text(),
                declared_name=path.name,
            )
            report = Ingestor(store, registry).ingest(doc, spec)
            emit(report.to_value())
            return EXIT_DOMAIN if report.status == IngestStatus.REJECTED else EXIT_OK

        if args.verb == "reindex":
            registry = _registry(args)
            store = _open_store(args, must_exist=True)
            index = rebuild_search_index(store, registry, _pseudonym_key(), clock.now_text())
            emit({"doc_count": index.doc_count, "snapshot": index.built_at_snapshot,
                  "terms": len(index.postings)})
            return EXIT_OK

        if args.verb == "materialize":
            registry = _registry(args)
            store = _open_store(args, must_exist=True)
            spec = registry.dataset(args.dataset)
            materialization_id, member_ids = materialize_dataset(
                spec, store, registry, clock.now_text()
            )
            emit({"dataset_id": spec.dataset_id, "materialization_id": materialization_id,
                  "member_count": len(member_ids)})
            return EXIT_OK

        if args.verb == "report":
            registry = _registry(args)
            store = _open_store(args, must_exist=True)
            schema = registry.schema_for(args.schema) if args.schema else None
            result = quality_report(args.dataset, store, schema, registry)
            emit(result.to_value())
            return EXIT_OK

        if args.verb == "replay":
            registry = _registry(args)
            store = _open_store(args, must_exist=True)
            target_dir = args.target or tempfile.mkdtemp(prefix="cdp-replay-")
            target = Store(target_dir)
            replay(store, registry, target, _pseudonym_key() or None)
            ok, detail = verify_replay(store, target)
            emit({"rebuilt_records": target.record_count(), "target": str(target_dir),
                  "verified": ok, "detail": detail})
            if args.verify and not ok:
                return EXIT_DOMAIN
            return EXIT_OK

        if args.verb == "search":
            store = _open_store(args, must_exist=True)
            index = _load_index(store)
            limit = max(1, min(args.limit, 500))
            results = search(args.query, index, limit=limit)
            emit({"results": [{"record_id": r, "score": s} for r, s in results]})
            return EXIT_OK

        if args.verb == "strain":
            store = _open_store(args, must_exist=True)
            profiles = _strain_profiles(store, args.dataset)
            if args.strain_verb == "similar":
                from .analytics.strain import nearest

                by_id = {p.sample_id: p for p in profiles}
                query = by_id.get(args.sample_id)
                if query is None:
                    raise UnknownDataset(f"no strain sample {args.sample_id!r}")
                ranked = nearest(query, profiles, k=max(1, args.k))
                emit({"sample_id": query.sample_id, "strain_name": query.strain_name,
                      "similar": [{"sample_id": s, "similarity": v} for s, v in ranked]})
            else:
                from .analytics.strain import name_consistency

                if len(profiles) < 2:
                    raise UnknownDataset("need at least 2 strain profiles")
                emit(name_consistency(profiles).to_value())
            return EXIT_OK

        if args.verb == "serve":
            from .api.app import App, serve

            registry = _registry(args)
            store = _open_store(args, must_exist=False)
            bind = args.bind or os.environ.get("CDP_BIND", "127.0.0.1:8080")
            app = App(
                store=store,
                registry=registry,
                clock=clock,
                pseudonym_key=_pseudonym_key(),
                admin_password=os.environ.get("CDP_ADMIN_PASSWORD"),
            )
            sys.stderr.write(f"cdp api listening on {bind}\n")
            serve(app, bind)
            return EXIT_OK

        raise UsageError(f"unknown verb {args.verb!r}")

    except FileNotFoundError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return EXIT_IO
    except StorageError as exc:
        sys.stderr.write(f"io error: {exc}\n")
        return EXIT_IO
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except CdpError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
