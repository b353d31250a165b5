"""End-to-end checks of locent_cli: schemas, CSV layout, reference values, exit codes, determinism.

usage: test_cli.py CLI_PATH SCHEMA_DIR
"""

import json
import os
import re
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = None
SCHEMAS = None

NINE_DIGITS = re.compile(r"^-?(\d+(\.\d*)?|\.\d+)(e[-+]\d+)?$")


def run(*args, expect=0):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True)
    if proc.returncode != expect:
        raise AssertionError(
            f"{' '.join(map(str, args))}: exit {proc.returncode}, expected {expect}\n{proc.stderr.decode()}"
        )
    return proc.stdout


def run_json(command, *args):
    doc = json.loads(run(command, *args, "--format", "json"))
    with open(os.path.join(SCHEMAS, f"{command}.schema.json")) as f:
        jsonschema.validate(doc, json.load(f))
    return doc


def run_csv(command, *args):
    raw = run(command, *args, "--format", "csv")
    assert b"\r" not in raw
    text = raw.decode()
    assert text.endswith("\n")
    lines = text[:-1].split("\n")
    header = lines[0].split(",")
    rows = [dict(zip(header, line.split(","))) for line in lines[1:]]
    return header, rows


def significant_digits(cell):
    mantissa = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    return len(mantissa)


def replay_args(config):
    """Rebuild the argument list from an echoed config block."""
    args = [config["command"]]
    for key, value in config.items():
        if key == "command":
            continue
        if isinstance(value, bool):
            if value:
                args.append(f"--{key}")
            continue
        if isinstance(value, list):
            value = ",".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        args += [f"--{key}", str(value)]
    return args


class SchemaAndLayout(unittest.TestCase):
    def test_every_command_validates(self):
        run_json("eof-surface", "--a-steps", "3", "--b-steps", "4")
        run_json("simon", "--a", "1", "--b", "inf")
        run_json("dispersion-curve", "--offset", "1", "--t-steps", "11")
        run_json("protocol", "--trials", "2", "--n-samples", "500")
        run_json("protocol", "--mode", "1", "--n-samples", "500")
        run_json("oracle-check", "--grid-n", "256", "--times", "0,1")

    def test_csv_layout(self):
        header, rows = run_csv("eof-surface", "--a-steps", "4", "--b-steps", "7")
        self.assertEqual(header, ["a", "b", "eof"])
        self.assertEqual(len(rows), 4 * 7)
        for row in rows:
            for cell in row.values():
                self.assertRegex(cell, NINE_DIGITS)
                self.assertLessEqual(significant_digits(cell), 9)

    def test_out_file_matches_stdout(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "curve.csv")
            self.assertEqual(run("dispersion-curve", "--out", path), b"")
            with open(path, "rb") as f:
                self.assertEqual(f.read(), run("dispersion-curve"))


class ReferenceValues(unittest.TestCase):
    def test_eof_surface(self):
        _, rows = run_csv("eof-surface", "--a", "1", "--b", "2")
        self.assertEqual(len(rows), 1)
        self.assertAlmostEqual(float(rows[0]["eof"]), 0.0829970620, places=9)

        _, rows = run_csv("eof-surface", "--a", "1", "--b-min", "1", "--b-max", "100", "--b-steps", "30")
        eofs = [float(r["eof"]) for r in rows]
        self.assertTrue(all(x > y for x, y in zip(eofs, eofs[1:])))
        self.assertLess(eofs[-1], 1e-3)

    def test_simon(self):
        r = run_json("simon", "--a", "1", "--b", "2")["results"]
        self.assertAlmostEqual(r["I_general"], -0.166667, places=6)
        self.assertAlmostEqual(r["I_closed"], -0.166667, places=6)
        self.assertFalse(r["separable"])
        r = run_json("simon", "--a", "1", "--b", "inf")["results"]
        self.assertEqual(r["I_closed"], 0)
        self.assertTrue(r["separable"])
        r = run_json("simon", "--a", "2", "--b", "2")["results"]
        self.assertAlmostEqual(r["I_general"], -1.333333, places=6)

    def test_dispersion_curve(self):
        _, rows = run_csv("dispersion-curve", "--u", "1.01", "--b", "1", "--times", "0")
        self.assertAlmostEqual(float(rows[0]["dx_separable"]), 0.495050, places=6)
        self.assertAlmostEqual(float(rows[0]["dx_entangled"]), 2.506149, places=6)

        _, rows = run_csv("dispersion-curve", "--t-min", "0", "--t-max", "200", "--t-steps", "5")
        gaps = [float(r["dx_entangled"]) / float(r["dx_separable"]) - 1 for r in rows]
        self.assertTrue(all(x > y for x, y in zip(gaps, gaps[1:])))

        r = run_json("dispersion-curve", "--offset", "1", "--times", "0,0.5,3")["results"]
        self.assertAlmostEqual(r["crossing"]["lab_clock"], 3.458391, places=6)
        self.assertAlmostEqual(r["crossing"]["entangled_clock"], 2.458391, places=6)
        self.assertIsNone(r["rows"][0]["dx_entangled"])

    def test_protocol_noiseless(self):
        r = run_json("protocol", "--mode", "2", "--noiseless", "--u", "1.01", "--b", "1", "--t0", "1")["results"]
        trial = r["trials"][0]
        self.assertEqual(trial["verdict"]["classification"], "entangled")
        self.assertAlmostEqual(trial["fit"]["alpha"], 25.628109, places=6)
        self.assertAlmostEqual(trial["fit"]["beta"], 1.0, places=9)
        self.assertAlmostEqual(trial["verdict"]["b_hat"], 1.0, places=9)

        r = run_json("protocol", "--mode", "2", "--noiseless", "--b", "inf", "--t0", "2")["results"]
        trial = r["trials"][0]
        self.assertEqual(trial["verdict"]["classification"], "separable")
        self.assertEqual(trial["verdict"]["b_hat"], "inf")
        self.assertAlmostEqual(trial["fit"]["alpha"], 1.0, places=9)
        self.assertAlmostEqual(trial["t0_hat"], 2.0, places=9)

    def test_protocol_one_with_large_samples(self):
        r = run_json("protocol", "--mode", "1", "--n-samples", "1000000", "--trials", "3")["results"]
        self.assertEqual(r["summary"]["entangled"], 3)
        r = run_json("protocol", "--mode", "1", "--b", "inf", "--n-samples", "1000000", "--trials", "3")["results"]
        self.assertEqual(r["summary"]["separable"], 3)

    def test_oracle_check(self):
        r = run_json("oracle-check", "--a", "1", "--b", "2", "--times", "1")["results"]
        self.assertTrue(r["pass"])
        self.assertLess(r["rows"][0]["dx1_rel"], 1e-3)
        r = run_json("oracle-check", "--a", "1", "--b", "inf", "--times", "0")["results"]
        self.assertLess(r["c_block_max"], 1e-6)


class ExitCodes(unittest.TestCase):
    def test_domain_violations(self):
        run("simon", "--a", "-1", expect=2)
        run("simon", "--a", "1", "--b", "0", expect=2)
        run("dispersion-curve", "--u", "0.5", "--b", "1", expect=2)
        run("protocol", "--u", "0.9", "--b", "1", expect=2)
        run("protocol", "--mode", "3", expect=2)

    def test_oracle_failures(self):
        run("oracle-check", "--grid-n", "64", "--grid-L", "200", expect=3)
        run("oracle-check", "--grid-n", "256", "--grid-L", "7.5", "--times", "5", expect=3)

    def test_ill_conditioned_fit(self):
        run("protocol", "--noiseless", "--times", "1,1,1", expect=4)
        run("protocol", "--noiseless", "--times", "0,1", expect=4)


class Determinism(unittest.TestCase):
    def test_reruns_are_byte_identical(self):
        args = ("protocol", "--trials", "3", "--n-samples", "2000", "--seed", "99")
        self.assertEqual(run(*args), run(*args))
        self.assertNotEqual(run(*args), run("protocol", "--trials", "3", "--n-samples", "2000", "--seed", "98"))

    def test_echoed_config_reproduces_the_run(self):
        for command, args in [
            ("protocol", ["--trials", "2", "--n-samples", "3000", "--seed", "5", "--t0", "0.3"]),
            ("protocol", ["--mode", "1", "--b", "inf", "--n-samples", "3000", "--seed", "5"]),
            ("dispersion-curve", ["--offset", "1", "--t-steps", "7"]),
            ("eof-surface", ["--a-steps", "2", "--b-steps", "3"]),
            ("simon", ["--a", "0.7", "--b", "inf"]),
            ("oracle-check", ["--grid-n", "128", "--times", "0,0.5"]),
        ]:
            with self.subTest(command=command):
                first = run(command, *args, "--format", "json")
                replayed = run(*replay_args(json.loads(first)["config"]))
                self.assertEqual(first, replayed)

    def test_metadata_records_seed(self):
        doc = run_json("simon", "--seed", "17")
        self.assertEqual(doc["metadata"]["seed"], 17)
        self.assertEqual(doc["config"]["seed"], 17)


if __name__ == "__main__":
    CLI, SCHEMAS = sys.argv[1], sys.argv[2]
    unittest.main(argv=[sys.argv[0], "-v"])
