import unittest

from meter import Meter


class MeterTest(unittest.TestCase):
    def setUp(self):
        self.m = Meter(50)

    def test_small(self):
        self.m.add(4)
        self.assertEqual(self.m.scaled(), 71)
        self.assertEqual(self.m.half(), 6.5)
        self.assertFalse(self.m.over())
