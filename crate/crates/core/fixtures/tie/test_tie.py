import unittest

from left import f
from right import g


class TieTest(unittest.TestCase):
    def test_both(self):
        self.assertEqual(f() + g(), 3)
