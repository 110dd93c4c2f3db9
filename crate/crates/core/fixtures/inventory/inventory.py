class Inventory:
    def __init__(self, capacity):
        self.capacity = capacity
        self.items = {}

    def add(self, name, qty):
        if qty <= 0:
            raise ValueError("quantity must be positive")
        if self.size() + qty > self.capacity:
            return False
        self.items[name] = self.items.get(name, 0) + qty
        return True

    def remove(self, name, qty):
        have = self.items.get(name, 0)
        if qty > have:
            return False
        if have - qty == 0:
            del self.items[name]
        else:
            self.items[name] = have - qty
        return True

    def size(self):
        return sum(self.items.values())

    def free(self):
        return self.capacity - self.size()

    def is_full(self):
        return self.size() >= self.capacity and self.capacity > 0

    def share(self, name):
        if self.size() == 0:
            return 0.0
        return self.items.get(name, 0) / self.size() * 100
