import unittest

from fee import fee


class FeeTest(unittest.TestCase):
    def test_positive(self):
        self.assertTrue(fee(0) > 0)
