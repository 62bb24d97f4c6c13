#!/usr/bin/env python3
"""Exit codes, determinism and schema conformance of the dualrail CLI."""

import argparse
import json
import pathlib
import shutil
import subprocess
import sys

failures = []


def check(ok, what):
    print(("ok   " if ok else "FAIL ") + what)
    if not ok:
        failures.append(what)


def run(cli, args):
    return subprocess.run([cli, *args], capture_output=True, text=True)


def load_validators(schema_dir):
    try:
        import jsonschema
        from referencing import Registry, Resource
    except ImportError:
        print("jsonschema not available; schema checks skipped")
        return None, None
    config = json.loads((schema_dir / "config.schema.json").read_text())
    result = json.loads((schema_dir / "result.schema.json").read_text())
    registry = Registry().with_resources(
        [
            ("config.schema.json", Resource.from_contents(config)),
            ("dualrail/config.schema.json", Resource.from_contents(config)),
        ]
    )
    cls = jsonschema.validators.validator_for(config)
    return cls(config, registry=registry), cls(result, registry=registry)


def schema_errors(validator, doc):
    if validator is None:
        return []
    return [e.message for e in validator.iter_errors(doc)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schema-dir", required=True, type=pathlib.Path)
    ap.add_argument("--config-dir", required=True, type=pathlib.Path)
    ap.add_argument("--work", required=True, type=pathlib.Path)
    ap.add_argument("--shots", type=int, default=120)
    a = ap.parse_args()

    shutil.rmtree(a.work, ignore_errors=True)
    a.work.mkdir(parents=True)
    config_v, result_v = load_validators(a.schema_dir)

    # exit codes
    p = run(a.cli, [])
    check(p.returncode == 1, "no subcommand exits 1")
    p = run(a.cli, ["memory", "--shots", "0"])
    check(p.returncode == 1, "zero shots on the command line exits 1")
    bad = a.work / "bad.json"
    bad.write_text('{"experiment": "memory", "noise": {"t2": -1.0}}')
    p = run(a.cli, ["memory", "--config", str(bad), "--out", str(a.work / "bad_out.json")])
    check(p.returncode == 1, "negative T2 exits 1")
    bad.write_text('{"experiment": "memory", "shots": 10, "unknownKey": 1}')
    p = run(a.cli, ["memory", "--config", str(bad), "--out", str(a.work / "bad_out.json")])
    check(p.returncode == 1, "unknown key exits 1")
    bad.write_text("{not json")
    p = run(a.cli, ["memory", "--config", str(bad), "--out", str(a.work / "bad_out.json")])
    check(p.returncode == 1, "malformed JSON exits 1")
    p = run(a.cli, ["bell", "--config", str(a.config_dir / "superdense.json"), "--out", str(a.work / "x.json")])
    check(p.returncode == 1, "config for another experiment exits 1")
    check(not (a.work / "bad_out.json").exists(), "failed runs write nothing")

    # every shipped config validates and runs
    for cfg_path in sorted(a.config_dir.glob("*.json")):
        cfg = json.loads(cfg_path.read_text())
        errs = schema_errors(config_v, cfg)
        check(not errs, f"{cfg_path.name} matches the config schema {errs[:2]}")
        out = a.work / cfg_path.stem / "result.json"
        p = run(a.cli, [cfg["experiment"], "--config", str(cfg_path), "--shots", str(a.shots), "--out", str(out)])
        check(p.returncode == 0, f"{cfg_path.name} runs (exit {p.returncode}) {p.stderr.strip()[:200]}")
        if p.returncode != 0:
            continue
        doc = json.loads(out.read_text())
        errs = schema_errors(result_v, doc)
        check(not errs, f"{cfg_path.name} result matches the result schema {errs[:2]}")
        errs = schema_errors(config_v, doc["config"])
        check(not errs, f"{cfg_path.name} echoed config matches the config schema {errs[:2]}")
        for curve in doc["curves"]:
            csv = out.parent / f"result_{curve['label']}.csv"
            check(csv.exists(), f"{cfg_path.name} wrote {csv.name}")
            if csv.exists():
                lines = csv.read_text().splitlines()
                check(lines[0] == "tau_us,value,stderr" and len(lines) == len(curve["points"]) + 1,
                      f"{csv.name} has a header and one row per point")

    # determinism: the same seed gives byte-identical files
    outs = []
    same_path = a.work / "repeat" / "m.json"
    for k in range(2):
        shutil.rmtree(same_path.parent, ignore_errors=True)
        p = run(a.cli, ["memory", "--config", str(a.config_dir / "memory_d2.json"), "--shots", str(a.shots),
                        "--seed", "77", "--out", str(same_path)])
        check(p.returncode == 0, f"repeat run {k} exits 0")
        d = a.work / f"repeat{k}"
        if same_path.parent.exists():
            shutil.copytree(same_path.parent, d)
        outs.append(d)
    if all((d / "m.json").exists() for d in outs):
        names = sorted(f.name for f in outs[0].iterdir())
        check(names == sorted(f.name for f in outs[1].iterdir()), "repeat runs write the same files")
        same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
        check(same, "repeat runs are byte-identical")
    shutil.rmtree(same_path.parent, ignore_errors=True)
    run(a.cli, ["memory", "--config", str(a.config_dir / "memory_d2.json"), "--shots", str(a.shots),
                "--seed", "78", "--out", str(same_path)])
    if same_path.exists() and (outs[0] / "m.json").exists():
        check(same_path.read_bytes() != (outs[0] / "m.json").read_bytes(), "a different seed changes the result")

    # verify-sequence prints its verdict and exits 0 either way
    p = run(a.cli, ["verify-sequence", "--sequence", "SINGLE_ISWAP", "--out", str(a.work / "v.json")])
    check(p.returncode == 0 and "FAIL" in p.stdout, "verify-sequence reports FAIL for SINGLE_ISWAP")
    p = run(a.cli, ["verify-sequence", "--sequence", "DN", "--n", "6", "--out", str(a.work / "v6.json")])
    check(p.returncode == 0 and "PASS" in p.stdout, "verify-sequence reports PASS for DN on 6 qubits")

    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
