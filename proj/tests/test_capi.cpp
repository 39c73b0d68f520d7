#include "prodtest.h"
int main() { return 0; }
