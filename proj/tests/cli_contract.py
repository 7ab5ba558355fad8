#!/usr/bin/env python3
"""End-to-end checks of the rsafe command line: exit codes, output schemas, determinism."""

import json
import os
import subprocess
import sys
import tempfile

import jsonschema

CLI, ROOT = sys.argv[1], sys.argv[2]
EX = os.path.join(ROOT, "tools", "examples")
SCHEMAS = os.path.join(ROOT, "schemas")
failures = []


def schema(name):
    with open(os.path.join(SCHEMAS, name + ".schema.json")) as f:
        return json.load(f)


def sample(name):
    return os.path.join(EX, name)


def run(*args):
    p = subprocess.run([CLI, *args], capture_output=True, text=True)
    return p.returncode, p.stdout, p.stderr


def check(label, cond, extra=""):
    if not cond:
        failures.append(f"{label} {extra}".strip())
    print(("ok   " if cond else "FAIL ") + label)


def expect(label, args, code=0, schema_name=None):
    rc, out, err = run(*args)
    check(f"{label}: exit {code}", rc == code, f"(got {rc}; stderr: {err.strip()})")
    doc = None
    if code == 0 and out.strip():
        try:
            doc = json.loads(out)
        except json.JSONDecodeError as e:
            check(f"{label}: JSON output", False, str(e))
            return None, err
        if schema_name:
            try:
                jsonschema.validate(doc, schema(schema_name))
                check(f"{label}: matches {schema_name} schema", True)
            except jsonschema.ValidationError as e:
                check(f"{label}: matches {schema_name} schema", False, e.message)
    return doc, err


def validate_input(name, schema_name):
    with open(sample(name)) as f:
        doc = json.load(f)
    try:
        jsonschema.validate(doc, schema(schema_name))
        check(f"sample {name} matches {schema_name} schema", True)
    except jsonschema.ValidationError as e:
        check(f"sample {name} matches {schema_name} schema", False, e.message)


for name, kind in [("worked.json", "mdp"), ("chain.json", "mdp"), ("trivial.json", "mdp"), ("bandit.json", "bandit"),
                   ("two_arms.json", "bandit"), ("chatbot.json", "bandit"), ("worked_uniform.json", "distribution"),
                   ("worked_skewed.json", "distribution"), ("chain_uniform.json", "distribution"),
                   ("worked_bad_policy.json", "policy"), ("bandit_ref.json", "policy"),
                   ("two_arms_ref.json", "policy"), ("worked_rhat.json", "reward")]:
    validate_input(name, kind)

# validate
expect("validate mdp", ["validate", sample("worked.json")], 0, "validate")
doc, _ = expect("validate chain rational", ["--mode", "rational", "validate", sample("chain.json")], 0, "validate")
if doc:
    check("chain range J is exact", doc["range_j"] == "17/8", str(doc["range_j"]))
expect("validate bandit", ["validate", sample("bandit.json")], 0, "validate")
expect("validate trivial reward", ["validate", sample("trivial.json")], 3)
expect("validate malformed", ["validate", sample("malformed.json")], 2)
expect("validate missing file", ["validate", sample("does_not_exist.json")], 2)
expect("unknown subcommand", ["frobnicate"], 2)

with tempfile.TemporaryDirectory() as tmp:
    with open(sample("worked.json")) as f:
        floaty = json.load(f)
    floaty["gamma"] = 0.5
    fpath = os.path.join(tmp, "floaty.json")
    with open(fpath, "w") as f:
        json.dump(floaty, f)
    expect("float literal rejected in rational mode", ["--mode", "rational", "validate", fpath], 2)
    expect("float literal promoted", ["--mode", "rational", "--promote-floats", "validate", fpath], 0, "validate")
    expect("float literal fine in float mode", ["validate", fpath], 0, "validate")

    # matrix
    doc, _ = expect("matrix worked", ["--mode", "rational", "matrix", sample("worked.json")], 0, "matrix")
    if doc:
        check("worked matrix has 6 rows", len(doc["rows"]) == 6, str(len(doc["rows"])))
    a = run("--mode", "rational", "matrix", sample("chain.json"))
    b = run("--mode", "rational", "matrix", sample("chain.json"))
    check("matrix output is byte-identical across runs", a == b)
    mpath = os.path.join(tmp, "m.json")
    rc, out, _ = run("--mode", "rational", "--out", mpath, "matrix", sample("worked.json"))
    check("matrix --out prints row count", rc == 0 and out.strip() == "rows: 6", out.strip())

    opt = os.path.join(tmp, "opt.json")
    with open(opt, "w") as f:
        json.dump({"policy": [[1, 0, 0]]}, f)
    expect("attack unreg with optimal policy", ["attack", sample("worked.json"), "--kind", "unreg", "--policy", opt,
                                                "--dist", sample("worked_uniform.json"), "--epsilon", "1/2"], 5)

    # check, including the round trip through a saved matrix
    for dist in ("worked_uniform.json", "worked_skewed.json"):
        fresh, _ = expect(f"check {dist}", ["--mode", "rational", "check", sample("worked.json"), "--dist",
                                            sample(dist)], 0, "verdict")
        reused, _ = expect(f"check {dist} with saved matrix", ["--mode", "rational", "check", sample("worked.json"),
                                                               "--dist", sample(dist), "--matrix", mpath], 0, "verdict")
        check(f"saved matrix reproduces verdict for {dist}", fresh == reused)
    doc, _ = expect("check uniform below threshold", ["--mode", "rational", "check", sample("worked.json"), "--dist",
                                                      sample("worked_uniform.json"), "--epsilon", "1/10"], 0)
    check("uniform D with eps below threshold is safe", doc is not None and doc["safe"])
    doc, _ = expect("check skewed", ["--mode", "rational", "check", sample("worked.json"), "--dist",
                                     sample("worked_skewed.json"), "--epsilon", "1/10"], 0)
    check("tiny mass on a bad support is unsafe with witness",
          doc is not None and not doc["safe"] and doc["witness"] is not None)
    doc, _ = expect("check with oracle", ["--mode", "rational", "check", sample("chain.json"), "--dist",
                                          sample("chain_uniform.json"), "--oracle"], 0, "verdict")
    check("oracle agreement", doc is not None and doc.get("agreement") is True)

# attack
doc, _ = expect("attack unreg", ["--mode", "rational", "attack", sample("worked.json"), "--kind", "unreg", "--dist",
                                 sample("worked_skewed.json"), "--policy", sample("worked_bad_policy.json"),
                                 "--epsilon", "1/5"], 0, "attack_report")
check("unreg certified", doc is not None and doc["certified"])
doc, _ = expect("attack unreg default search", ["attack", sample("chain.json"), "--epsilon", "0.6"], 0,
                "attack_report")
check("searched bad policy certified", doc is not None and doc["certified"])
expect("attack unreg support mass above budget", ["attack", sample("chain.json")], 5)
doc, _ = expect("attack reg", ["attack", sample("two_arms.json"), "--kind", "reg", "--ref", sample("two_arms_ref.json"),
                               "-L", "0.9", "--epsilon", "0.05"], 0, "attack_report")
check("reg certified", doc is not None and doc["certified"])
_, err = expect("attack reg condition fails", ["attack", sample("worked.json"), "--kind", "reg", "--dist",
                                               sample("worked_uniform.json")], 5)
check("reg failure names the support condition", "D(supp D^pi*) <= eps/(1+C)" in err, err.strip())
doc, _ = expect("attack rlhf", ["attack", sample("bandit.json"), "--kind", "rlhf", "--ref", sample("bandit_ref.json"),
                                "--lambda", "0.2", "--epsilon", "1", "-L", "1/2"], 0, "attack_report")
check("rlhf certified", doc is not None and doc["certified"])
doc, _ = expect("attack rlhf-mae", ["attack", sample("bandit.json"), "--kind", "rlhf-mae", "--ref",
                                    sample("bandit_ref.json"), "--lambda", "0.2", "--epsilon", "1/2", "-L", "1/2"], 0,
                "attack_report")
check("rlhf-mae certified", doc is not None and doc["certified"])
doc, _ = expect("attack rlhf chatbot", ["attack", sample("chatbot.json"), "--kind", "rlhf", "--lambda", "5",
                                        "--epsilon", "1/2", "-L", "1/2"], 0, "attack_report")
check("chatbot with many styles certified", doc is not None and doc["certified"])
expect("attack rlhf uniform reference fails", ["attack", sample("bandit.json"), "--kind", "rlhf", "--epsilon", "1/10"], 5)
expect("attack rlhf in rational mode", ["--mode", "rational", "attack", sample("bandit.json"), "--kind", "rlhf"], 2)
expect("attack rlhf needs a bandit", ["attack", sample("worked.json"), "--kind", "rlhf"], 2)
expect("attack unknown kind", ["attack", sample("worked.json"), "--kind", "other"], 2)

# verify-bounds
doc, _ = expect("verify-bounds", ["verify-bounds", sample("chain.json")], 0, "verify_bounds")
check("all bounds hold", doc is not None and doc["all_hold"])
a = run("--seed", "7", "verify-bounds", sample("chain.json"), "-T", "2", "--trials", "5")
b = run("--seed", "7", "verify-bounds", sample("chain.json"), "-T", "2", "--trials", "5")
check("verify-bounds is byte-identical for a fixed seed", a == b and a[0] == 0)
doc, _ = expect("verify-bounds T=1", ["verify-bounds", sample("worked.json"), "-T", "1"], 0, "verify_bounds")
check("T=1 bounds hold", doc is not None and doc["all_hold"])
expect("verify-bounds over cap", ["--cap", "10", "verify-bounds", sample("chain.json"), "-T", "4"], 4)

# example
for name, key in [("tightness", "all_match"), ("chatbot", "all_match"), ("worked", "a_p_ones")]:
    doc, _ = expect(f"example {name}", ["example", "--name", name], 0, "example")
    check(f"example {name} reports {key}", doc is not None and doc[key] is True)
doc, _ = expect("example tightness rational", ["--mode", "rational", "example", "--name", "tightness"], 0, "example")
check("rational tightness matches", doc is not None and doc["all_match"] is True)

# threshold and regret-bound
doc, _ = expect("threshold", ["--mode", "rational", "threshold", sample("worked.json"), "--dist",
                              sample("worked_uniform.json")], 0, "threshold")
check("threshold squared is 1/72", doc is not None and doc["threshold_squared"] == "1/72")
expect("threshold needs positive D", ["--mode", "rational", "threshold", sample("worked.json"), "--dist",
                                      sample("worked_bad_policy.json")], 2)
doc, _ = expect("regret-bound", ["--mode", "rational", "regret-bound", sample("worked.json"), "--rhat",
                                 sample("worked_rhat.json")], 0, "regret_bound")
check("regret bound dominates optimal regret", doc is not None and doc["holds"])

print(f"{len(failures)} failure(s)")
for f in failures:
    print("  " + f)
sys.exit(1 if failures else 0)
