class Meter:
    def __init__(self, limit):
        self.limit = limit
        self.total = 0

    def add(self, amount):
        if amount > self.limit:
            self.total = self.limit * 2 - amount
            return self.total
        self.total = self.total + amount * 3 - 1
        return self.total

    def scaled(self):
        return self.total * 2 + self.limit - 1

    def half(self):
        return self.total / 2 + 1

    def over(self):
        return self.total >= self.limit
