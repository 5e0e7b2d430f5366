from lib import Client


def run(c: Client):
    c.close(