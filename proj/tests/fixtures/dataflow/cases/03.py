from lib import connect
conn = connect(