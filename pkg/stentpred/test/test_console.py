import io
import logging
import unittest

from stentpred.util.console import *


class LoggingCase(unittest.TestCase):
    def setUp(self):
        self.stream = io.StringIO()
        self.handler = setup_logging(stream=self.stream)

    def tearDown(self):
        root = logging.getLogger("stentpred")
        root.removeHandler(self.handler)
        root.setLevel(logging.NOTSET)
        root.propagate = True

    def test_plain_stream(self):
        logging.getLogger("stentpred.x").info("hello %d", 3)
        logging.getLogger("stentpred.x").debug("hidden")
        self.assertEqual(self.stream.getvalue(), "INFO:stentpred.x:hello 3\n")

    def test_verbose(self):
        self.handler = setup_logging(verbose=True, stream=self.stream)
        logging.getLogger("stentpred.y").debug("shown")
        self.assertEqual(self.stream.getvalue(), "DEBUG:stentpred.y:shown\n")
        self.assertEqual(len(logging.getLogger("stentpred").handlers), 1)


class RuleCase(unittest.TestCase):
    def test_first_rule_wins(self):
        rules = [("^ERROR:.*$", r"<\g<0>>"), ("ERROR", "E")]
        self.assertEqual(sub_rules("ERROR: x", rules), "<ERROR: x>")
        self.assertEqual(sub_rules("ERROR: x", rules, max_matches=2), "<E: x>")
        self.assertEqual(sub_rules("INFO: x", rules), "INFO: x")

    def test_formatter(self):
        record = logging.LogRecord("stentpred.z", logging.WARNING, __file__, 1,
                                   "careful", None, None)
        formatter = RuleFormatter([("^WARNING:", "W:")])
        self.assertEqual(formatter.format(record), "W:stentpred.z:careful")
