DEFAULT_TIMEOUT = 30


def connect(host, timeout=DEFAULT_TIMEOUT):
    return Client(host)


def helper():
    return 1


class Client:
    retries = 3

    def __init__(self, host):
        self.host = host

    def send(self, payload):
        return payload

    def close(self):
        pass


class Server:
    port = 80

    def start(self):
        pass


class Foo:
    def b(self):
        return 1
