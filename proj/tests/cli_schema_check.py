"""Validate every `--format json` output of the CLI against schemas/."""

import json
import pathlib
import subprocess
import sys
import tempfile

from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def load_registry(schema_dir):
    schemas = {}
    for path in sorted(schema_dir.glob("*.schema.json")):
        schema = json.loads(path.read_text())
        schemas[path.name.removesuffix(".schema.json")] = schema
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values()
    )
    return schemas, registry


def main():
    cli, schema_dir, fixtures = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    schemas, registry = load_registry(schema_dir)
    for schema in schemas.values():
        Draft202012Validator.check_schema(schema)

    work = pathlib.Path(tempfile.mkdtemp(prefix="effectsize-schema-"))
    dist = work / "dist.json"
    dist.write_text(json.dumps({
        "components": [
            {"weight": 0.5, "kind": "point_mass", "value": 0.0},
            {"weight": 0.3, "kind": "normal", "center": 0.1, "scale": 0.05},
            {"weight": 0.1, "kind": "uniform", "lo": -0.1, "hi": 0.2},
            {"weight": 0.1, "kind": "discrete", "values": [0.05, 0.15], "masses": [0.5, 0.5]},
        ]
    }))
    balls = work / "balls.json"
    balls.write_text(json.dumps({"bin_edges": [0, 0.1, 0.2], "balls": [12, 8], "total_balls": 20}))
    session = fixtures / "midpoint_session.golden.json"

    cases = [
        ("ate", ["ate", "--range", "0,0.2", "--p-null", "0.5"]),
        ("ate", ["ate", "--types", "0.30,0.65,0,0.05"]),
        ("ate", ["ate", "--balls", str(balls), "--p-null", "0.9"]),
        ("diagnostics", ["power", "--effect", "0.25", "--n-per-arm", "63", "--binary-conservative"]),
        ("diagnostics", ["power", "--effect", "0", "--se", "0.1"]),
        ("diagnostics", ["power", "--se", "0.04", "--dist", str(dist), "--draws", "20000", "--seed", "5"]),
        ("required_n", ["solve-n", "--effect", "0.04", "--target-power", "0.8"]),
        ("required_n", ["solve-n", "--effect", "0.1", "--target-power", "0.9", "--sd", "0.5", "--allocation", "2"]),
        ("scenario_run", ["scenario", "run", "all"]),
        ("scenario_list", ["scenario", "list"]),
        ("replay", ["elicit", "--replay", str(session)]),
    ]
    failures = 0
    for schema_name, args in cases:
        proc = subprocess.run([cli, "--format", "json", *args], capture_output=True, text=True)
        label = " ".join(args)
        if proc.returncode != 0:
            print(f"FAIL {label}: exit {proc.returncode}: {proc.stderr.strip()}")
            failures += 1
            continue
        validator = Draft202012Validator(schemas[schema_name], registry=registry)
        errors = sorted(validator.iter_errors(json.loads(proc.stdout)), key=lambda e: list(e.path))
        if errors:
            failures += 1
            print(f"FAIL {label}: {errors[0].message} at {list(errors[0].path)}")
        else:
            print(f"ok   {label} [{schema_name}]")

    validator = Draft202012Validator(schemas["session"], registry=registry)
    errors = list(validator.iter_errors(json.loads(session.read_text())))
    print(("FAIL" if errors else "ok  ") + " golden session [session]")
    failures += bool(errors)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
