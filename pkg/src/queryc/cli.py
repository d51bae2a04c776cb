"""Command-line surface.

Commands print machine-readable results (JSON or canonical text) on
stdout and diagnostics on stderr.  Exit codes: 0 success, 1 invalid
expression or document, 2 lexical/syntax error, 3 configuration or
transport failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .clients import ChatCompletionClient, ChatGenerator, RemoteRetriever
from .config import AppConfig, load_config
from .errors import (
    ConfigError,
    ExpressionError,
    NoValidExpression,
    ResponseFormatError,
    SchemaViolation,
    TransportError,
)
from .evalkit import TokenCounts, aggregate_run, load_eval_rows, score_row
from .executor import execute
from .nodes import portable_dumps, portable_loads, render_tree
from .parser import parse
from .retrieval import LexicalIndex, load_corpus
from .testkit import load_script
from .translator import build_training_pairs, translate
from .validator import validate

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_CONFIG = 3


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExpressionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NoValidExpression as exc:
        print(f"error: {exc}", file=sys.stderr)
        for rejection in exc.rejected:
            print(f"  rejected: {rejection.expression!r}", file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, TransportError, ResponseFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="queryc",
                                     description="Compile, check and run query expressions.")
    parser.add_argument("--config", help="path to a JSON config file")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("compile", help="parse an expression and print its tree as JSON")
    p.add_argument("expression", help="expression text, or a question with --from-query")
    p.add_argument("--from-query", action="store_true",
                   help="translate natural language first (needs an endpoint)")
    p.add_argument("--compact", action="store_true", help="single-line JSON")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("validate", help="check dependency consistency")
    p.add_argument("expression", nargs="?", help="expression text")
    p.add_argument("--ast", help="read a tree from a JSON document instead")
    p.add_argument("--strict", action="store_true",
                   help="also warn about repeated placeholder references")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("tree", help="print an indented rendering of the tree")
    p.add_argument("expression")
    p.set_defaults(func=_cmd_tree)

    p = sub.add_parser("run", help="execute an expression against backends")
    p.add_argument("input", help="expression text, or a question with --translate")
    p.add_argument("--translate", action="store_true",
                   help="translate the input first (needs an endpoint)")
    p.add_argument("--question", help="original question for the synthesis step")
    p.add_argument("--corpus", help="JSONL corpus for the built-in lexical retriever")
    p.add_argument("--script", help="scripted generator file (offline runs)")
    p.add_argument("--k", type=int, help="documents per leaf")
    p.add_argument("--parallelism", type=int, help="max concurrent list children")
    p.add_argument("--trace", help="write the full execution trace to this file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="run and score a JSONL eval set")
    p.add_argument("dataset", help='rows of {"id","question","golds"}')
    p.add_argument("--corpus", help="JSONL corpus for the built-in lexical retriever")
    p.add_argument("--script", help="scripted generator file (offline runs)")
    p.add_argument("--k", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out", help="write per-row results to this JSON file")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-data", help="build a training dataset from questions")
    p.add_argument("questions", help="text file, one question per line")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=_cmd_gen_data)

    return parser


def _cmd_compile(args) -> int:
    if args.from_query:
        config = load_config(args.config)
        with _completion_client(config) as client:
            result = translate(args.expression, config.schedule, client=client)
        tree = result.ast
        print(f"translated: {result.expression}", file=sys.stderr)
    else:
        tree = parse(args.expression)
    print(portable_dumps(tree, pretty=not args.compact))
    return EXIT_OK


def _cmd_validate(args) -> int:
    if args.ast:
        tree = portable_loads(Path(args.ast).read_text("utf-8"))
    elif args.expression is not None:
        tree = parse(args.expression)
    else:
        raise ConfigError("give an expression or --ast FILE")
    report = validate(tree, strict=args.strict)
    print(json.dumps({
        "valid": report.valid,
        "violations": [
            {"node_path": list(v.node_path), "kind": v.kind.value, "message": v.message}
            for v in report.violations
        ],
        "warnings": list(report.warnings),
    }, ensure_ascii=False))
    for violation in report.violations:
        print(f"{violation.kind.value} at {list(violation.node_path)}: {violation.message}",
              file=sys.stderr)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK if report.valid else EXIT_INVALID


def _cmd_tree(args) -> int:
    print(render_tree(parse(args.expression)))
    return EXIT_OK


def _completion_client(config: AppConfig) -> ChatCompletionClient:
    endpoint = config.require("endpoint", "set QC_ENDPOINT or the config file")
    model = config.require("model", "set QC_MODEL or the config file")
    return ChatCompletionClient(endpoint, model, config.api_key,
                                timeout=config.schedule.request_timeout)


def _make_retriever(args, config: AppConfig):
    corpus_path = getattr(args, "corpus", None) or config.corpus
    if corpus_path:
        return LexicalIndex(load_corpus(corpus_path))
    if config.retriever_endpoint:
        return RemoteRetriever(config.retriever_endpoint)
    raise ConfigError("no retriever: give --corpus, or configure corpus/retriever_endpoint")


def _make_generator(args, config: AppConfig):
    script_path = getattr(args, "script", None)
    if script_path:
        return load_script(script_path)
    return ChatGenerator(_completion_client(config))


def _cmd_run(args) -> int:
    config = load_config(args.config)
    retriever = _make_retriever(args, config)
    generator = _make_generator(args, config)
    if args.translate:
        with _completion_client(config) as client:
            result = translate(args.input, config.schedule, client=client)
        tree, question = result.ast, args.input
        print(f"translated: {result.expression}", file=sys.stderr)
    else:
        tree, question = parse(args.input), args.question
    report = validate(tree)
    if not report.valid:
        for violation in report.violations:
            print(f"{violation.kind.value} at {list(violation.node_path)}: {violation.message}",
                  file=sys.stderr)
        return EXIT_INVALID
    trace = execute(tree, retriever, generator,
                    k=args.k or config.k,
                    parallelism=args.parallelism or config.parallelism,
                    question=question,
                    templates=config.prompt_overrides)
    if args.trace:
        Path(args.trace).write_text(trace.to_json() + "\n", "utf-8")
    print(json.dumps({"answer": trace.final_answer, "totals": trace.totals.as_dict()},
                     ensure_ascii=False))
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = load_config(args.config)
    retriever = _make_retriever(args, config)
    generator = _make_generator(args, config)
    client = None
    rows = load_eval_rows(args.dataset)
    scored = []
    details = []
    for row in rows:
        expression = row.get("expression")
        try:
            if expression:
                tree = parse(expression)
            else:
                if client is None:
                    client = _completion_client(config)
                result = translate(row["question"], config.schedule, client=client)
                tree, expression = result.ast, result.expression
            trace = execute(tree, retriever, generator,
                            k=args.k or config.k,
                            parallelism=args.parallelism or config.parallelism,
                            question=row["question"],
                            templates=config.prompt_overrides)
            answer = trace.final_answer
            tokens = trace.totals
        except (ExpressionError, NoValidExpression) as exc:
            print(f"{row['id']}: no valid expression ({exc})", file=sys.stderr)
            answer, tokens = "", TokenCounts()
        metric = score_row(str(row["id"]), answer, row["golds"], tokens)
        scored.append(metric)
        details.append({"id": metric.question_id, "answer": answer, "em": metric.em,
                        "acc": metric.acc, "f1": round(metric.f1, 4),
                        "tokens": metric.tokens.as_dict()})
    if client is not None:
        client.close()
    report = aggregate_run(scored)
    if args.out:
        Path(args.out).write_text(
            json.dumps({"aggregate": report, "rows": details}, indent=2, ensure_ascii=False) + "\n",
            "utf-8")
    print(json.dumps(report, ensure_ascii=False))
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    config = load_config(args.config)
    questions = [line.strip() for line in Path(args.questions).read_text("utf-8").splitlines()
                 if line.strip()]
    with _completion_client(config) as client:
        report = build_training_pairs(questions, config.schedule,
                                      client=client, out_path=args.out)
    for drop in report.drops:
        print(f"dropped {drop.question!r}: {drop.reason}", file=sys.stderr)
    print(json.dumps({"kept": report.kept, "dropped": report.dropped, "out": report.out_path},
                     ensure_ascii=False))
    return EXIT_OK
