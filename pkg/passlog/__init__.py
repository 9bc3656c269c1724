from passlog.cli import passlog_app


def main():
    passlog_app()
