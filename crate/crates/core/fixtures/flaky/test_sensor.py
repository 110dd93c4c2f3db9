import unittest

from sensor import Sensor


class SensorTest(unittest.TestCase):
    def test_read(self):
        s = Sensor("probe")
        s.read()
        self.assertEqual(s.count(), 1)
