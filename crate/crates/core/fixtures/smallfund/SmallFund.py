class SmallFund:
    def __init__(self, owner):
        self._balance = 0
        self._transactions = []
        self.owner = owner

    def get_balance(self):
        return self._balance

    def deposit(self, amount):
        if amount >= 0:
            self._balance += amount
            self._transactions.append( amount)
        else:
            raise Exception("Can not deposit negative amounts")

    def is_empty(self):
        return self._balance == 0

    def get_transactions(self):
        return self._transactions

    def get_self(self):
        return self
