import sys

args = sys.argv[1:]


def main(argv=None):
    argv = argv or args
    return len(argv)
