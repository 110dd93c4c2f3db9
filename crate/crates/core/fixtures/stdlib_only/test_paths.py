import os.path
import unittest


class PathTest(unittest.TestCase):
    def test_join(self):
        self.assertEqual(os.path.join("a", "b"), "a/b")
