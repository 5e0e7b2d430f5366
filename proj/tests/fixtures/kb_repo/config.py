"""Settings loaded at startup."""
import os

DEBUG = False
TIMEOUT: int = 30
HOST, PORT = "localhost", 8080
os.environ["MODE"] = "test"
