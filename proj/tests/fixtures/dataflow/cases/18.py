from lib import connect, helper
result = helper() + connect(