# tests/test_config_manager.py
import os
import tempfile
import unittest

from config.schemas import parse_bool, parse_float_list
from engine.errors import ConfigError
from utils.config_manager import ConfigManager


class TestConfigManager(unittest.TestCase):
    """Flat key = value files, overrides and per-command validation."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        path = os.path.join(self.tmp.name, "run.cfg")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_defaults_filled(self):
        config = ConfigManager().validate("figure1")
        self.assertEqual(config["L"], 1000)
        self.assertEqual(config["b_grid"], (1.0, 10.0, 30.0, 50.0))
        self.assertEqual(config["base_seed"], 42)

    def test_file_and_override(self):
        manager = ConfigManager()
        manager.load_file(self.write("# experiment\nL = 10\nb_grid = 1, 2\n\nbase_seed = 7  # seed\n"))
        manager.apply_overrides(["L=20"])
        config = manager.validate("figure1")
        self.assertEqual(config["L"], 20)
        self.assertEqual(config["b_grid"], (1.0, 2.0))
        self.assertEqual(config["base_seed"], 7)

    def test_invalid_value_names_line_and_field(self):
        manager = ConfigManager()
        manager.load_file(self.write("base_seed = 1\nL = many\n"))
        with self.assertRaises(ConfigError) as ctx:
            manager.validate("figure1")
        self.assertEqual(ctx.exception.field, "L")
        self.assertEqual(ctx.exception.line, 2)
        self.assertIn("line 2", str(ctx.exception))

    def test_unknown_key(self):
        manager = ConfigManager({"colour": "blue"})
        with self.assertRaises(ConfigError) as ctx:
            manager.validate("validate")
        self.assertEqual(ctx.exception.field, "colour")

    def test_repeated_key(self):
        with self.assertRaises(ConfigError) as ctx:
            ConfigManager().load_file(self.write("L = 1\nL = 2\n"))
        self.assertEqual(ctx.exception.line, 2)

    def test_line_without_equals(self):
        with self.assertRaises(ConfigError):
            ConfigManager().load_file(self.write("just words\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            ConfigManager().load_file(os.path.join(self.tmp.name, "absent.cfg"))

    def test_rate_required_for_changepoint_simulation(self):
        with self.assertRaises(ConfigError) as ctx:
            ConfigManager({"model": "changepoint"}).validate("simulate")
        self.assertEqual(ctx.exception.field, "rate")
        config = ConfigManager({"model": "geometric"}).validate("simulate")
        self.assertIsNone(config["rate"])

    def test_non_positive_parameter(self):
        with self.assertRaises(ConfigError) as ctx:
            ConfigManager({"model": "geometric", "b": "-1"}).validate("simulate")
        self.assertEqual(ctx.exception.field, "b")

    def test_validate_minimum_replicates(self):
        with self.assertRaises(ConfigError):
            ConfigManager({"n_reps": "50"}).validate("validate")

    def test_unknown_command(self):
        with self.assertRaises(ConfigError):
            ConfigManager().validate("play")

    def test_hash_ignores_execution_keys(self):
        a = ConfigManager({"threads": "1", "output": "a.json"})
        b = ConfigManager({"threads": "8", "output": "b.json", "progress": "true"})
        a.validate("validate")
        b.validate("validate")
        self.assertEqual(a.config_hash(), b.config_hash())

    def test_hash_tracks_semantic_keys(self):
        a = ConfigManager({"base_seed": "1"})
        b = ConfigManager({"base_seed": "2"})
        a.validate("validate")
        b.validate("validate")
        self.assertNotEqual(a.config_hash(), b.config_hash())

    def test_hash_requires_validation(self):
        with self.assertRaises(ConfigError):
            ConfigManager().config_hash()


class TestParsers(unittest.TestCase):

    def test_bool(self):
        self.assertTrue(parse_bool("yes"))
        self.assertFalse(parse_bool("False"))
        with self.assertRaises(ValueError):
            parse_bool("maybe")

    def test_float_list(self):
        self.assertEqual(parse_float_list("1, 0.1,0.01"), (1.0, 0.1, 0.01))
        self.assertEqual(parse_float_list([1, 2]), (1.0, 2.0))


if __name__ == '__main__':
    unittest.main()
