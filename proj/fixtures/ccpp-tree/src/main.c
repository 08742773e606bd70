#include <stdio.h>
#include <sqlite3.h>

int main(void) {
    sqlite3 *db = NULL;
    return sqlite3_open(":memory:", &db);
}
