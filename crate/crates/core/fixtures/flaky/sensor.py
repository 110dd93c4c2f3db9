import random


class Sensor:
    def __init__(self, name):
        self.name = name
        self.reads = 0

    def read(self):
        self.reads += 1
        return random.random()

    def noise(self):
        return random.randint(0, 10 ** 9)

    def count(self):
        return self.reads
