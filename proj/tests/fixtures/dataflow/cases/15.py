from lib import Client


class Wrapper:
    def __init__(self):
        self.client = Client('x')

    def go(self):
        return self.client.send(