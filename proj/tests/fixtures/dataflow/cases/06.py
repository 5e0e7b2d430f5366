from lib import Server as S
srv = S()
srv.start(