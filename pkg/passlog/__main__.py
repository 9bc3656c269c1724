from passlog.cli import passlog_app

if __name__ == "__main__":
    passlog_app()
